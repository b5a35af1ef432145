#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facecycle/layers.hpp"
#include "facecycle/rng.hpp"

namespace facecycle::netspec {

struct ConvLayerSpec {
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  bool operator==(const ConvLayerSpec&) const = default;
};

/// Declarative patch-discriminator stack. The layer list covers every
/// convolution including the final 1-channel score layer; channel widths are
/// derived (base width doubling after each stride-2 layer, capped), not
/// stored per layer.
struct ConvStackSpec {
  std::vector<ConvLayerSpec> layers;
  int in_channels = 3;
  int base_width = 64;
  int max_width = 512;
  std::string norm = "instance";  // "instance" | "none"; never on first/last layer
  float leaky_slope = 0.2f;
  int target_rf = 0;  // 0 = unconstrained
};

/// Parses comma-separated "k<kernel>s<stride>[p<pad>]" tokens.
/// Padding defaults to kernel/2 when omitted.
ConvStackSpec parse_stack(const std::string& text);
std::string format_stack(const ConvStackSpec& spec);

struct RfTraceRow {
  int kernel = 0;
  int stride = 0;
  long long r = 1;  // receptive field after this layer
  long long j = 1;  // input-pixel jump between adjacent units after this layer
};

int receptive_field(const ConvStackSpec& spec, std::vector<RfTraceRow>* trace = nullptr);
int output_map_size(const ConvStackSpec& spec, int input_side);

/// Smallest stack (fewest layers, then lexicographically least
/// (kernel, stride) sequence) over kernels {3,4,5,7} and non-increasing
/// strides {1,2} whose receptive field is exactly target_rf.
ConvStackSpec synthesize_stack(int target_rf, int max_layers = 7);

/// Derived per-layer output channels; last layer is always 1.
std::vector<int> stack_widths(const ConvStackSpec& spec);

struct GeneratorSpec {
  int resolution = 128;
  int base_width = 64;
  int downsample_layers = 2;
  int residual_blocks = 6;
  std::string norm = "instance";
};

struct Discriminator {
  ConvStackSpec spec;
  nn::Sequential net;

  Tensor4 forward(const Tensor4& x) const { return net.forward(x); }
  Tensor4 forward(const Tensor4& x, nn::Tape& tape) const { return net.forward(x, tape); }
};

struct Generator {
  GeneratorSpec spec;
  nn::Sequential net;

  Tensor4 forward(const Tensor4& x) const { return net.forward(x); }
  Tensor4 forward(const Tensor4& x, nn::Tape& tape) const { return net.forward(x, tape); }
};

Discriminator build_discriminator(const ConvStackSpec& spec, Rng& rng);
Generator build_generator(const GeneratorSpec& spec, Rng& rng);

/// Sets every conv weight and bias to a constant. Test/probe helper: with a
/// positive constant and leaky activations no gradient cancellation can occur.
void set_constant_conv_params(nn::Sequential& net, float value);

/// Side length of the bounding box of nonzero input gradient for the center
/// output unit. Normalization layers are bypassed: they couple pixels through
/// plane-wide statistics, which would mask the convolutional footprint the
/// probe measures. Requires an interior output unit (map size >= 3).
int empirical_rf_probe(const Discriminator& disc, int input_side);

}  // namespace facecycle::netspec
