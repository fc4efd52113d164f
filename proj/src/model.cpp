#include "colpick/nn/model.hpp"

#include "colpick/errors.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace colpick::nn {

namespace {

std::string to_hex(const float* data, Eigen::Index n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(n) * 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    for (int s = 28; s >= 0; s -= 4) out.push_back(digits[(bits >> s) & 0xF]);
  }
  return out;
}

void from_hex(const std::string& hex, float* data, Eigen::Index n, const std::string& what) {
  if (hex.size() != static_cast<std::size_t>(n) * 8) throw ConfigError("checkpoint: wrong length for " + what);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 8; ++k) {
      const char c = hex[static_cast<std::size_t>(i) * 8 + k];
      int d;
      if (c >= '0' && c <= '9') {
        d = c - '0';
      } else if (c >= 'a' && c <= 'f') {
        d = c - 'a' + 10;
      } else {
        throw ConfigError("checkpoint: bad hex digit in " + what);
      }
      bits = (bits << 4) | static_cast<std::uint32_t>(d);
    }
    std::memcpy(data + i, &bits, sizeof bits);
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Eigen::Index count(const std::vector<DenseLayer<float>*>& layers) {
  Eigen::Index n = 0;
  for (auto* l : layers) n += l->size();
  return n;
}

}  // namespace

const std::array<double, kNodeFeatures>& input_scale() {
  static const std::array<double, kNodeFeatures> s{{
      1, 20, 1, 1, 20, 30, 30, 5, 5,            // current picker, AMR
      1, 20, 5, 20, 30,                         // other pickers
      1, 1,                                     // region
      20, 20, 20, 20, 20, 20, 20,               // neighborhood
      50, 50, 5, 20, 20, 50, 50,                // node workload
      50, 50, 50, 50, 50,                       // distribution
  }};
  return s;
}

Mat<float> PolicyModel::input(const FeatureTensor& f) const {
  Mat<float> x = scale_features<float>(f);
  if (efficiency_only) x.bottomRows(kFairnessFeatures).setZero();
  return x;
}

void PolicyModel::init(std::uint64_t seed) {
  RandomStream rs(seed);
  for (auto* l : all_layers()) l->init(rs);
}

std::vector<DenseLayer<float>*> PolicyModel::all_layers() {
  auto out = actor.layers();
  for (auto* l : critic.layers()) out.push_back(l);
  return out;
}

Eigen::Index PolicyModel::actor_parameter_count() { return count(actor.layers()); }
Eigen::Index PolicyModel::critic_parameter_count() { return count(critic.layers()); }

nlohmann::json PolicyModel::manifest() {
  nlohmann::json layers = nlohmann::json::array();
  for (auto* l : all_layers()) {
    layers.push_back({{"name", l->name},
                      {"in", l->in()},
                      {"out", l->out()},
                      {"activation", l->act == Activation::kLeakyRelu ? "leaky_relu" : "identity"}});
  }
  return {{"actor", to_string(actor.kind())},
          {"efficiency_only", efficiency_only},
          {"leaky_slope", kLeakySlope},
          {"layers", layers},
          {"input_scale", input_scale()},
          {"actor_parameters", actor_parameter_count()},
          {"critic_parameters", critic_parameter_count()},
          {"notes", "actor head: concat of both category embeddings (32) -> 16 -> 1; "
                    "alternative reading places the 16-unit layer before the concat"}};
}

nlohmann::json checkpoint_json(PolicyModel& model, const nlohmann::json& metadata) {
  nlohmann::json params = nlohmann::json::object();
  for (auto* l : model.all_layers()) {
    params[l->name] = {{"W", to_hex(l->W.data(), l->W.size())}, {"b", to_hex(l->b.data(), l->b.size())}};
  }
  return {{"format", "colpick-policy"},
          {"version", kCheckpointVersion},
          {"feature_manifest_hash", hash_hex(feature_manifest_hash())},
          {"manifest", model.manifest()},
          {"metadata", metadata.is_null() ? nlohmann::json::object() : metadata},
          {"parameters", params}};
}

PolicyModel model_from_checkpoint(const nlohmann::json& j, nlohmann::json* metadata) {
  try {
    if (j.at("format") != "colpick-policy") throw ConfigError("checkpoint: unknown format");
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("checkpoint: unsupported version");
    if (j.at("feature_manifest_hash").get<std::string>() != hash_hex(feature_manifest_hash())) {
      throw ConfigError("checkpoint: feature manifest hash mismatch");
    }
    const std::string kind = j.at("manifest").at("actor").get<std::string>();
    if (kind != "aemo" && kind != "invff") throw ConfigError("checkpoint: unknown actor '" + kind + "'");
    PolicyModel model(kind == "aemo" ? ActorKind::kAemo : ActorKind::kInvFF,
                      j.at("manifest").value("efficiency_only", false));
    if (model.manifest() != j.at("manifest")) throw ConfigError("checkpoint: architecture manifest mismatch");
    const auto& params = j.at("parameters");
    for (auto* l : model.all_layers()) {
      const auto& p = params.at(l->name);
      from_hex(p.at("W").get<std::string>(), l->W.data(), l->W.size(), l->name + ".W");
      from_hex(p.at("b").get<std::string>(), l->b.data(), l->b.size(), l->name + ".b");
    }
    if (metadata) *metadata = j.value("metadata", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, PolicyModel& model, const nlohmann::json& metadata) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  os << checkpoint_json(model, metadata).dump(1) << '\n';
}

PolicyModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_checkpoint(j, metadata);
}

}  // namespace colpick::nn
