#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "facecycle/netspec.hpp"
#include "testutil.hpp"

using namespace facecycle;
using namespace facecycle::netspec;

namespace {

// Independent recurrence used as the oracle for synthesis tests.
int rf_by_recurrence(const std::vector<std::pair<int, int>>& layers) {
  long long r = 1, j = 1;
  for (auto [k, s] : layers) {
    r += static_cast<long long>(k - 1) * j;
    j *= s;
  }
  return static_cast<int>(r);
}

// Exhaustive enumeration over the same search space, in the same preference
// order, reimplemented from scratch.
std::optional<std::vector<std::pair<int, int>>> oracle_search(int target, int max_layers) {
  const int kernels[] = {3, 4, 5, 7};
  const int strides[] = {1, 2};
  std::vector<std::pair<int, int>> cur;
  std::optional<std::vector<std::pair<int, int>>> best;
  auto rec = [&](auto&& self, int depth_left, int prev_stride) -> bool {
    if (depth_left == 0) return rf_by_recurrence(cur) == target;
    for (int k : kernels)
      for (int s : strides) {
        if (s > prev_stride) continue;
        cur.push_back({k, s});
        if (self(self, depth_left - 1, s)) return true;
        cur.pop_back();
      }
    return false;
  };
  for (int depth = 1; depth <= max_layers; ++depth) {
    cur.clear();
    if (rec(rec, depth, 2)) return cur;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("receptive field recurrence reproduces hand-evaluated values") {
  CHECK(receptive_field(parse_stack("k1s1")) == 1);
  CHECK(receptive_field(parse_stack("k4s2,k4s2,k4s2,k4s1,k4s1")) == 70);

  std::vector<RfTraceRow> trace;
  CHECK(receptive_field(parse_stack("k4s2,k4s2,k4s1,k4s1,k3s1"), &trace) == 42);
  std::vector<long long> rs;
  for (auto& row : trace) rs.push_back(row.r);
  CHECK(rs == std::vector<long long>{4, 10, 22, 34, 42});

  CHECK(receptive_field(parse_stack("k5s2,k7s2,k5s2,k5s1,k5s1"), &trace) == 97);
  rs.clear();
  for (auto& row : trace) rs.push_back(row.r);
  CHECK(rs == std::vector<long long>{5, 17, 33, 65, 97});
}

TEST_CASE("receptive field is monotone in any single kernel size") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    int depth = 1 + static_cast<int>(rng.bounded(5));
    ConvStackSpec spec;
    for (int i = 0; i < depth; ++i)
      spec.layers.push_back({static_cast<int>(1 + rng.bounded(7)),
                             static_cast<int>(1 + rng.bounded(3)), 0});
    int base = receptive_field(spec);
    size_t layer = rng.bounded(depth);
    ConvStackSpec bigger = spec;
    bigger.layers[layer].kernel += 1 + static_cast<int>(rng.bounded(3));
    CHECK(receptive_field(bigger) >= base);
  }
}

TEST_CASE("output map size follows the convolution arithmetic") {
  CHECK(output_map_size(parse_stack("k1s1p0"), 128) == 128);
  // floor((128 + 2*1 - 4)/2) + 1
  CHECK(output_map_size(parse_stack("k4s2p1"), 128) == 64);
  CHECK(output_map_size(parse_stack("k4s2p1,k4s2p1,k4s1p1,k4s1p1,k3s1p1"), 128) == 30);
  CHECK_THROWS_WITH_AS(output_map_size(parse_stack("k7s1p0"), 6), "stack consumes input",
                       std::invalid_argument);
}

TEST_CASE("output map size matches a live forward pass") {
  auto spec = parse_stack("k4s2p1,k4s2p1,k4s1p1,k4s1p1,k3s1p1");
  spec.base_width = 8;
  Rng rng(1);
  auto disc = build_discriminator(spec, rng);
  Tensor4 x = random_tensor(2, 3, 128, 128, rng);
  Tensor4 score = disc.forward(x);
  CHECK(score.n() == 2);
  CHECK(score.c() == 1);
  CHECK(score.h() == output_map_size(spec, 128));
  CHECK(score.w() == output_map_size(spec, 128));
}

TEST_CASE("stack parse/format round trip") {
  const char* cases[] = {"k4s2p1,k4s2p1,k3s1p1", "k1s1p0", "k5s2p2,k7s2p3,k5s1p2"};
  for (const char* c : cases) CHECK(format_stack(parse_stack(c)) == c);
  // default padding is kernel/2 when omitted
  auto spec = parse_stack("k4s2,k3s1");
  CHECK(spec.layers[0].pad == 2);
  CHECK(spec.layers[1].pad == 1);
  CHECK_THROWS_WITH_AS(parse_stack("k4s0"), "stride must be >= 1", std::invalid_argument);
  CHECK_THROWS_AS(parse_stack("4s2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_stack(""), std::invalid_argument);
}

TEST_CASE("synthesize_stack hits its target and matches the search oracle") {
  CHECK(format_stack(synthesize_stack(1)) == "k1s1p0");
  for (int target : {42, 97, 70, 49, 21, 12, 5}) {
    CAPTURE(target);
    auto spec = synthesize_stack(target);
    CHECK(receptive_field(spec) == target);
    auto oracle = oracle_search(target, 7);
    REQUIRE(oracle.has_value());
    REQUIRE(oracle->size() == spec.layers.size());
    for (size_t i = 0; i < spec.layers.size(); ++i) {
      CHECK(spec.layers[i].kernel == (*oracle)[i].first);
      CHECK(spec.layers[i].stride == (*oracle)[i].second);
    }
  }
  // determinism
  CHECK(format_stack(synthesize_stack(42)) == format_stack(synthesize_stack(42)));
  CHECK_THROWS_WITH_AS(synthesize_stack(2), "unreachable receptive field", std::invalid_argument);
  CHECK_THROWS_AS(synthesize_stack(0), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_stack(300), std::invalid_argument);
}

TEST_CASE("synthesized stacks satisfy rf(synthesize(t)) == t across the range") {
  for (int target = 3; target <= 128; ++target) {
    ConvStackSpec spec;
    try {
      spec = synthesize_stack(target);
    } catch (const std::invalid_argument&) {
      continue;  // unreachable targets are allowed to throw
    }
    CHECK(receptive_field(spec) == target);
    for (size_t i = 1; i < spec.layers.size(); ++i)
      CHECK(spec.layers[i].stride <= spec.layers[i - 1].stride);
  }
}

TEST_CASE("discriminator widths double after stride-2 layers and end at 1") {
  auto spec = parse_stack("k4s2p1,k4s2p1,k4s2p1,k4s1p1,k4s1p1");
  auto widths = stack_widths(spec);
  CHECK(widths == std::vector<int>{64, 128, 256, 512, 1});
  spec.base_width = 24;
  spec.max_width = 48;
  widths = stack_widths(spec);
  CHECK(widths == std::vector<int>{24, 48, 48, 48, 1});
}

TEST_CASE("build_discriminator is a pure function of the seed") {
  auto spec = parse_stack("k4s2p1,k4s2p1,k3s1p1");
  spec.base_width = 8;
  Rng r1(42), r2(42), r3(43);
  auto d1 = build_discriminator(spec, r1);
  auto d2 = build_discriminator(spec, r2);
  auto d3 = build_discriminator(spec, r3);
  auto p1 = d1.net.params("d");
  auto p2 = d2.net.params("d");
  auto p3 = d3.net.params("d");
  REQUIRE(p1.size() == p2.size());
  bool all_equal = true, any_diff_seed = false;
  for (size_t i = 0; i < p1.size(); ++i) {
    if (max_abs_diff(*p1[i].value, *p2[i].value) != 0.0) all_equal = false;
    if (max_abs_diff(*p1[i].value, *p3[i].value) != 0.0) any_diff_seed = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("generator preserves shape, bounds output and is seed-deterministic") {
  GeneratorSpec spec;
  spec.resolution = 32;
  spec.base_width = 8;
  spec.residual_blocks = 2;
  Rng r1(5), r2(5);
  auto g1 = build_generator(spec, r1);
  auto g2 = build_generator(spec, r2);
  Rng data_rng(77);
  Tensor4 x = random_tensor(2, 3, 32, 32, data_rng, 2.0f);
  Tensor4 y1 = g1.forward(x);
  CHECK(y1.shape() == x.shape());
  for (size_t i = 0; i < y1.size(); ++i) {
    REQUIRE(y1[i] >= -1.0f);
    REQUIRE(y1[i] <= 1.0f);
  }
  Tensor4 y2 = g2.forward(x);
  CHECK(max_abs_diff(y1, y2) == 0.0);
}

TEST_CASE("empirical probe equals the analytic receptive field") {
  auto probe_stack = [](const std::string& text, int side) {
    auto spec = parse_stack(text);
    spec.base_width = 8;
    Rng rng(1);
    auto disc = build_discriminator(spec, rng);
    set_constant_conv_params(disc.net, 0.01f);
    return empirical_rf_probe(disc, side);
  };
  CHECK(probe_stack("k1s1", 8) == 1);
  CHECK(probe_stack("k4s2,k4s2,k4s1,k4s1,k3s1", 128) == 42);
  CHECK(probe_stack("k5s2,k7s2,k5s2,k5s1,k5s1", 256) == 97);

  for (int target : {21, 49}) {
    auto spec = synthesize_stack(target);
    spec.base_width = 8;
    Rng rng(2);
    auto disc = build_discriminator(spec, rng);
    set_constant_conv_params(disc.net, 0.01f);
    CHECK(empirical_rf_probe(disc, 128) == target);
  }
}

TEST_CASE("probe rejects inputs without an interior unit") {
  auto spec = parse_stack("k5s2,k7s2,k5s2,k5s1,k5s1");
  spec.base_width = 4;
  Rng rng(3);
  auto disc = build_discriminator(spec, rng);
  CHECK_THROWS_WITH_AS(empirical_rf_probe(disc, 16), "input too small for probe",
                       std::invalid_argument);
}

TEST_CASE("probe detects a dead layer") {
  auto spec = parse_stack("k4s2,k4s2,k3s1");
  spec.base_width = 4;
  Rng rng(4);
  auto disc = build_discriminator(spec, rng);
  set_constant_conv_params(disc.net, 0.0f);
  CHECK(empirical_rf_probe(disc, 64) != receptive_field(spec));
}
