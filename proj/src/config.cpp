#include "facecycle/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace facecycle::config {

using nlohmann::json;

namespace {

json crop_to_json(const imaging::CropSpec& c) {
  return json{{"left", c.left},
              {"top", c.top},
              {"width", c.width},
              {"height", c.height},
              {"output_side", c.output_side}};
}

imaging::CropSpec crop_from_json(const json& j) {
  imaging::CropSpec c;
  c.left = j.at("left").get<int>();
  c.top = j.at("top").get<int>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.output_side = j.at("output_side").get<int>();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{
      {"image_size", c.image_size},
      {"batch_size", c.batch_size},
      {"total_steps", c.total_steps},
      {"seed", c.seed},
      {"backend", c.backend},
      {"optimizer",
       {{"kind", c.optimizer.kind},
        {"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon},
        {"linear_lr_decay", c.optimizer.linear_lr_decay}}},
      {"loss_weights",
       {{"alpha", c.loss_weights.alpha},
        {"beta", c.loss_weights.beta},
        {"lambda", c.loss_weights.lambda},
        {"gamma", c.loss_weights.gamma},
        {"real_label", c.loss_weights.real_label},
        {"fake_label", c.loss_weights.fake_label},
        {"gen_target", c.loss_weights.gen_target}}},
      {"cycle_norm", c.cycle_norm},
      {"average_d_losses", c.average_d_losses},
      {"d_steps_per_g", c.d_steps_per_g},
      {"discriminators_y", c.discriminators_y},
      {"discriminators_x", c.discriminators_x},
      {"discriminator_base_width", c.discriminator_base_width},
      {"discriminator_norm", c.discriminator_norm},
      {"generator",
       {{"base_width", c.generator.base_width},
        {"downsample_layers", c.generator.downsample_layers},
        {"residual_blocks", c.generator.residual_blocks},
        {"normalization", c.generator.norm}}},
      {"data_x", c.data_x},
      {"data_y", c.data_y},
      {"crop_x", crop_to_json(c.crop_x)},
      {"crop_y", crop_to_json(c.crop_y)},
      {"checkpoint_interval", c.checkpoint_interval},
      {"output_dir", c.output_dir}};
}

TrainConfig from_json(const json& j) {
  TrainConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.total_steps = j.at("total_steps").get<long long>();
  c.seed = j.at("seed").get<uint64_t>();
  c.backend = j.at("backend").get<std::string>();
  const auto& o = j.at("optimizer");
  c.optimizer.kind = o.at("kind").get<std::string>();
  c.optimizer.learning_rate = o.at("learning_rate").get<double>();
  c.optimizer.beta1 = o.at("beta1").get<double>();
  c.optimizer.beta2 = o.at("beta2").get<double>();
  c.optimizer.epsilon = o.at("epsilon").get<double>();
  c.optimizer.linear_lr_decay = o.at("linear_lr_decay").get<bool>();
  const auto& w = j.at("loss_weights");
  c.loss_weights.alpha = w.at("alpha").get<double>();
  c.loss_weights.beta = w.at("beta").get<double>();
  c.loss_weights.lambda = w.at("lambda").get<double>();
  c.loss_weights.gamma = w.at("gamma").get<double>();
  c.loss_weights.real_label = w.at("real_label").get<double>();
  c.loss_weights.fake_label = w.at("fake_label").get<double>();
  c.loss_weights.gen_target = w.at("gen_target").get<double>();
  c.cycle_norm = j.at("cycle_norm").get<std::string>();
  c.average_d_losses = j.at("average_d_losses").get<bool>();
  c.d_steps_per_g = j.at("d_steps_per_g").get<int>();
  c.discriminators_y = j.at("discriminators_y").get<std::vector<std::string>>();
  c.discriminators_x = j.at("discriminators_x").get<std::vector<std::string>>();
  c.discriminator_base_width = j.at("discriminator_base_width").get<int>();
  c.discriminator_norm = j.at("discriminator_norm").get<std::string>();
  const auto& g = j.at("generator");
  c.generator.base_width = g.at("base_width").get<int>();
  c.generator.downsample_layers = g.at("downsample_layers").get<int>();
  c.generator.residual_blocks = g.at("residual_blocks").get<int>();
  c.generator.norm = g.at("normalization").get<std::string>();
  c.generator.resolution = c.image_size;
  c.data_x = j.at("data_x").get<std::string>();
  c.data_y = j.at("data_y").get<std::string>();
  c.crop_x = crop_from_json(j.at("crop_x"));
  c.crop_y = crop_from_json(j.at("crop_y"));
  c.checkpoint_interval = j.at("checkpoint_interval").get<long long>();
  c.output_dir = j.at("output_dir").get<std::string>();
  return c;
}

// Every key in `user` must exist in `base`; objects merge recursively,
// anything else replaces the default.
json merge_checked(const json& base, const json& user, const std::string& path) {
  json out = base;
  for (const auto& [key, value] : user.items()) {
    std::string full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("unknown config key '" + full + "'");
    if (value.is_object() && base.at(key).is_object())
      out[key] = merge_checked(base.at(key), value, full);
    else
      out[key] = value;
  }
  return out;
}

void apply_override(json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key=value: " + assignment);
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // bare strings are taken verbatim
  }
  json* cur = &j;
  size_t start = 0;
  while (true) {
    size_t dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("bad override key: " + key);
    if (dot == std::string::npos) {
      (*cur)[part] = parsed;
      break;
    }
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (image_size < 8) throw std::invalid_argument("image_size must be >= 8");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (backend != "parallel" && backend != "serial")
    throw std::invalid_argument("backend must be 'parallel' or 'serial'");
  optimizer.validate();
  loss_weights.validate();
  if (cycle_norm != "l1" && cycle_norm != "l2")
    throw std::invalid_argument("cycle_norm must be 'l1' or 'l2'");
  if (d_steps_per_g < 1) throw std::invalid_argument("d_steps_per_g must be >= 1");
  for (const auto* d : {&discriminators_y, &discriminators_x}) {
    if (d->empty() || d->size() > 2)
      throw std::invalid_argument("each direction needs 1 or 2 discriminator stacks");
    for (const auto& s : *d) netspec::parse_stack(s);
  }
  if (discriminator_base_width < 1)
    throw std::invalid_argument("discriminator_base_width must be >= 1");
  if (discriminator_norm != "instance" && discriminator_norm != "none")
    throw std::invalid_argument("discriminator_norm must be 'instance' or 'none'");
  if (generator.base_width < 1) throw std::invalid_argument("generator.base_width must be >= 1");
  if (generator.downsample_layers < 0 || generator.residual_blocks < 0)
    throw std::invalid_argument("generator layer counts must be >= 0");
  if (image_size % (1 << generator.downsample_layers) != 0)
    throw std::invalid_argument("image_size must be divisible by 2^generator.downsample_layers");
  if (generator.norm != "instance" && generator.norm != "none")
    throw std::invalid_argument("generator.normalization must be 'instance' or 'none'");
  if (checkpoint_interval < 1) throw std::invalid_argument("checkpoint_interval must be >= 1");
  for (const auto* crop : {&crop_x, &crop_y}) {
    if (crop->output_side != image_size)
      throw std::invalid_argument("crop output_side must equal image_size");
    if (crop->left < 0 || crop->top < 0 || crop->width < 0 || crop->height < 0)
      throw std::invalid_argument("crop rectangle must be non-negative");
  }
}

losses::CycleNorm TrainConfig::cycle_norm_enum() const {
  return cycle_norm == "l2" ? losses::CycleNorm::L2 : losses::CycleNorm::L1;
}

netspec::ConvStackSpec TrainConfig::disc_stack(const std::string& text) const {
  auto spec = netspec::parse_stack(text);
  spec.base_width = discriminator_base_width;
  spec.max_width = discriminator_base_width * 8;
  spec.norm = discriminator_norm;
  return spec;
}

TrainConfig default_config(int image_size) {
  TrainConfig c;
  c.image_size = image_size;
  c.crop_x.output_side = image_size;
  c.crop_y.output_side = image_size;
  c.generator.resolution = image_size;

  int rf_big, rf_small;
  if (image_size >= 128) {
    rf_big = 97;
    rf_small = 42;
    c.generator.base_width = 64;
    c.generator.residual_blocks = 6;
    c.discriminator_base_width = 64;
  } else if (image_size >= 64) {
    // Proportional desk-scale variant of the 97 + 42 pair.
    rf_big = (97 * image_size + 64) / 128;
    rf_small = (42 * image_size + 64) / 128;
    c.generator.base_width = 12;
    c.generator.residual_blocks = 3;
    c.discriminator_base_width = 16;
  } else {
    rf_big = std::max(3, (97 * image_size + 64) / 128);
    rf_small = std::max(3, (42 * image_size + 64) / 128);
    c.generator.base_width = 8;
    c.generator.residual_blocks = 1;
    c.discriminator_base_width = 8;
  }
  std::string big = netspec::format_stack(netspec::synthesize_stack(rf_big));
  std::string small = netspec::format_stack(netspec::synthesize_stack(rf_small));
  c.discriminators_y = {big, small};
  c.discriminators_x = {big, small};
  return c;
}

TrainConfig parse_config_json(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  if (!user.is_object()) throw std::invalid_argument("config must be a JSON object");
  json merged = merge_checked(to_json(TrainConfig{}), user, "");
  TrainConfig cfg;
  try {
    cfg = from_json(merged);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config type error: ") + e.what());
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json user;
  try {
    user = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(user, o);
  json merged = merge_checked(to_json(TrainConfig{}), user, "");
  TrainConfig cfg;
  try {
    cfg = from_json(merged);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config type error: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const TrainConfig& cfg) { return to_json(cfg).dump(2); }

uint64_t config_hash(const TrainConfig& cfg) { return fnv1a(to_json(cfg).dump()); }

}  // namespace facecycle::config
