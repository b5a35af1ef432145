#include "facecycle/netspec.hpp"

#include <algorithm>
#include <charconv>
#include <memory>
#include <stdexcept>

namespace facecycle::netspec {

namespace {

int parse_int(const std::string& tok, size_t& pos) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data() + pos, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr == tok.data() + pos)
    throw std::invalid_argument("bad stack token '" + tok + "'");
  pos = static_cast<size_t>(ptr - tok.data());
  return v;
}

ConvLayerSpec parse_layer_token(const std::string& tok) {
  ConvLayerSpec l;
  size_t pos = 0;
  if (pos >= tok.size() || tok[pos] != 'k') throw std::invalid_argument("bad stack token '" + tok + "'");
  ++pos;
  l.kernel = parse_int(tok, pos);
  if (pos >= tok.size() || tok[pos] != 's') throw std::invalid_argument("bad stack token '" + tok + "'");
  ++pos;
  l.stride = parse_int(tok, pos);
  if (pos < tok.size()) {
    if (tok[pos] != 'p') throw std::invalid_argument("bad stack token '" + tok + "'");
    ++pos;
    l.pad = parse_int(tok, pos);
    if (pos != tok.size()) throw std::invalid_argument("bad stack token '" + tok + "'");
  } else {
    l.pad = l.kernel / 2;
  }
  if (l.kernel < 1) throw std::invalid_argument("kernel must be >= 1");
  if (l.stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (l.pad < 0) throw std::invalid_argument("padding must be >= 0");
  return l;
}

}  // namespace

ConvStackSpec parse_stack(const std::string& text) {
  ConvStackSpec spec;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string tok = text.substr(start, end - start);
    // trim spaces
    while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
    while (!tok.empty() && tok.back() == ' ') tok.pop_back();
    if (tok.empty()) throw std::invalid_argument("empty stack token");
    spec.layers.push_back(parse_layer_token(tok));
    if (end == text.size()) break;
    start = end + 1;
  }
  if (spec.layers.empty()) throw std::invalid_argument("empty stack");
  return spec;
}

std::string format_stack(const ConvStackSpec& spec) {
  std::string out;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (i) out += ',';
    out += "k" + std::to_string(l.kernel) + "s" + std::to_string(l.stride) + "p" +
           std::to_string(l.pad);
  }
  return out;
}

int receptive_field(const ConvStackSpec& spec, std::vector<RfTraceRow>* trace) {
  if (spec.layers.empty()) throw std::invalid_argument("empty stack");
  long long r = 1, j = 1;
  if (trace) trace->clear();
  for (const auto& l : spec.layers) {
    r += static_cast<long long>(l.kernel - 1) * j;
    j *= l.stride;
    if (trace) trace->push_back({l.kernel, l.stride, r, j});
  }
  if (r > 1'000'000) throw std::invalid_argument("receptive field overflow");
  return static_cast<int>(r);
}

int output_map_size(const ConvStackSpec& spec, int input_side) {
  int s = input_side;
  for (const auto& l : spec.layers) {
    s = (s + 2 * l.pad - l.kernel) / l.stride + 1;
    if (s < 1) throw std::invalid_argument("stack consumes input");
  }
  return s;
}

ConvStackSpec synthesize_stack(int target_rf, int max_layers) {
  if (target_rf < 1 || target_rf > 256) throw std::invalid_argument("target rf out of range [1,256]");
  if (max_layers < 1 || max_layers > 7) throw std::invalid_argument("max_layers out of range [1,7]");
  ConvStackSpec spec;
  if (target_rf == 1) {
    spec.layers = {{1, 1, 0}};
    spec.target_rf = 1;
    return spec;
  }
  std::vector<ConvLayerSpec> cur;
  // Depth-first in lexicographic (kernel, stride) order; the first hit at the
  // shallowest depth is the preferred stack.
  auto search = [&](auto&& self, int depth_left, long long r, long long j,
                    int prev_stride) -> bool {
    if (depth_left == 0) return r == target_rf;
    if (r > target_rf) return false;
    for (int k : {3, 4, 5, 7})
      for (int s : {1, 2}) {
        if (s > prev_stride) continue;  // strides non-increasing across depth
        long long nr = r + static_cast<long long>(k - 1) * j;
        if (nr > target_rf) continue;
        cur.push_back({k, s, k / 2});
        if (self(self, depth_left - 1, nr, j * s, s)) return true;
        cur.pop_back();
      }
    return false;
  };

  for (int depth = 1; depth <= max_layers; ++depth) {
    cur.clear();
    if (search(search, depth, 1, 1, 2)) {
      spec.layers = cur;
      spec.target_rf = target_rf;
      return spec;
    }
  }
  throw std::invalid_argument("unreachable receptive field");
}

std::vector<int> stack_widths(const ConvStackSpec& spec) {
  std::vector<int> widths(spec.layers.size());
  int w = spec.base_width;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    if (i > 0 && spec.layers[i - 1].stride > 1) w = std::min(2 * w, spec.max_width);
    widths[i] = w;
  }
  if (!widths.empty()) widths.back() = 1;  // patch score map
  return widths;
}

Discriminator build_discriminator(const ConvStackSpec& spec, Rng& rng) {
  if (spec.layers.empty()) throw std::invalid_argument("empty stack");
  Discriminator d;
  d.spec = spec;
  auto widths = stack_widths(spec);
  int in_c = spec.in_channels;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const bool last = i + 1 == spec.layers.size();
    d.net.add(std::make_unique<nn::Conv2d>(in_c, widths[i], l.kernel, l.stride, l.pad, rng));
    if (!last) {
      if (spec.norm == "instance" && i > 0)
        d.net.add(std::make_unique<nn::InstanceNorm>(widths[i]));
      d.net.add(std::make_unique<nn::LeakyReLU>(spec.leaky_slope));
    }
    in_c = widths[i];
  }
  if (spec.target_rf != 0 && receptive_field(spec) != spec.target_rf)
    throw std::invalid_argument("stack receptive field " +
                                std::to_string(receptive_field(spec)) +
                                " does not match declared target " +
                                std::to_string(spec.target_rf));
  return d;
}

Generator build_generator(const GeneratorSpec& spec, Rng& rng) {
  if (spec.resolution < 4) throw std::invalid_argument("generator resolution too small");
  if (spec.downsample_layers < 0 || spec.residual_blocks < 0)
    throw std::invalid_argument("bad generator spec");
  if (spec.resolution % (1 << spec.downsample_layers) != 0)
    throw std::invalid_argument("resolution not divisible by downsampling factor");
  const bool use_norm = spec.norm == "instance";
  Generator g;
  g.spec = spec;
  auto& net = g.net;
  int w = spec.base_width;
  net.add(std::make_unique<nn::Conv2d>(3, w, 7, 1, 3, rng));
  if (use_norm) net.add(std::make_unique<nn::InstanceNorm>(w));
  net.add(std::make_unique<nn::ReLU>());
  for (int i = 0; i < spec.downsample_layers; ++i) {
    net.add(std::make_unique<nn::Conv2d>(w, 2 * w, 3, 2, 1, rng));
    w *= 2;
    if (use_norm) net.add(std::make_unique<nn::InstanceNorm>(w));
    net.add(std::make_unique<nn::ReLU>());
  }
  for (int i = 0; i < spec.residual_blocks; ++i) {
    nn::Sequential body;
    body.add(std::make_unique<nn::Conv2d>(w, w, 3, 1, 1, rng));
    if (use_norm) body.add(std::make_unique<nn::InstanceNorm>(w));
    body.add(std::make_unique<nn::ReLU>());
    body.add(std::make_unique<nn::Conv2d>(w, w, 3, 1, 1, rng));
    if (use_norm) body.add(std::make_unique<nn::InstanceNorm>(w));
    net.add(std::make_unique<nn::ResidualBlock>(std::move(body)));
  }
  for (int i = 0; i < spec.downsample_layers; ++i) {
    net.add(std::make_unique<nn::Upsample2x>());
    net.add(std::make_unique<nn::Conv2d>(w, w / 2, 3, 1, 1, rng));
    w /= 2;
    if (use_norm) net.add(std::make_unique<nn::InstanceNorm>(w));
    net.add(std::make_unique<nn::ReLU>());
  }
  net.add(std::make_unique<nn::Conv2d>(w, 3, 7, 1, 3, rng));
  net.add(std::make_unique<nn::Tanh>());
  return g;
}

void set_constant_conv_params(nn::Sequential& net, float value) {
  for (auto& layer : net.layers()) {
    if (auto* conv = dynamic_cast<nn::Conv2d*>(layer.get())) {
      conv->weights().fill(value);
      std::fill(conv->bias().begin(), conv->bias().end(), value);
    } else if (auto* res = dynamic_cast<nn::ResidualBlock*>(layer.get())) {
      set_constant_conv_params(res->body(), value);
    }
  }
}

int empirical_rf_probe(const Discriminator& disc, int input_side) {
  const int map = output_map_size(disc.spec, input_side);
  if (map < 3) throw std::invalid_argument("input too small for probe");

  // Forward through convolutions and activations only, keeping caches.
  Tensor4 cur(1, disc.spec.in_channels, input_side, input_side, 0.5f);
  std::vector<const nn::Layer*> path;
  std::vector<nn::Cache> caches;
  for (const auto& layer : disc.net.layers()) {
    if (std::string(layer->kind()) == "instance_norm") continue;
    path.push_back(layer.get());
    caches.emplace_back();
    cur = layer->forward(cur, caches.back());
  }

  // One-hot seed at the center unit of the patch map.
  Tensor4 dy = Tensor4::zeros_like(cur);
  dy.at(0, 0, cur.h() / 2, cur.w() / 2) = 1.0f;
  Tensor4 grad = dy;
  for (size_t i = path.size(); i-- > 0;)
    grad = const_cast<nn::Layer*>(path[i])->backward(grad, caches[i], /*acc_params=*/false);

  int y0 = input_side, y1 = -1, x0 = input_side, x1 = -1;
  for (int c = 0; c < grad.c(); ++c)
    for (int y = 0; y < grad.h(); ++y)
      for (int x = 0; x < grad.w(); ++x)
        if (grad.at(0, c, y, x) != 0.0f) {
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
        }
  if (y1 < 0) return 0;  // all-zero gradient (e.g. zeroed weights)
  return std::max(y1 - y0 + 1, x1 - x0 + 1);
}

}  // namespace facecycle::netspec
