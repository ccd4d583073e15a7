#include "factuality/models/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "factuality/errors.hpp"

namespace factuality::models {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'F', 'A', 'C', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  }
  return value;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& config) {
  return {{"arch", std::string(to_string(config.arch))},
          {"layers", config.layers},
          {"input_dim", config.input_dim},
          {"hidden_dim", config.hidden_dim},
          {"linear_activation", std::string(to_string(config.linear_activation))},
          {"tree_activation", std::string(to_string(config.tree_activation))},
          {"heads", config.heads}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "arch") {
        c.arch = parse_architecture(value.get<std::string>());
      } else if (key == "layers") {
        c.layers = value.get<std::size_t>();
      } else if (key == "input_dim") {
        c.input_dim = value.get<std::size_t>();
      } else if (key == "hidden_dim") {
        c.hidden_dim = value.get<std::size_t>();
      } else if (key == "linear_activation") {
        c.linear_activation = parse_activation(value.get<std::string>());
      } else if (key == "tree_activation") {
        c.tree_activation = parse_activation(value.get<std::string>());
      } else if (key == "heads") {
        c.heads = value.get<std::vector<std::string>>();
      } else {
        throw ConfigError("unknown model config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_checkpoint(std::ostream& out, const Model& model, const CheckpointInfo& info) {
  nlohmann::json header{{"config", config_to_json(model.config())},
                        {"seed", info.seed},
                        {"epoch", info.epoch},
                        {"metadata", info.metadata},
                        {"tensors", nlohmann::json::array()}};
  const auto params = model.parameters();
  for (const auto& [name, t] : params) header["tensors"].push_back({{"name", name}, {"shape", t->shape()}});
  const std::string text = header.dump();
  out.write(kMagic.data(), kMagic.size());
  write_raw(out, kCheckpointVersion);
  write_raw(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : params) {
    auto v = t->values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  save_checkpoint(out, model, info);
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("not a checkpoint file");
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = read_raw<std::uint64_t>(in, "header length");
  if (length > (std::uint64_t{1} << 32)) throw DataError("checkpoint header too large");
  std::string text(static_cast<std::size_t>(length), '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw DataError("checkpoint truncated in header");

  nlohmann::json header;
  ModelConfig config;
  CheckpointInfo info;
  try {
    header = nlohmann::json::parse(text);
    config = config_from_json(header.at("config"));
    info.seed = header.at("seed").get<std::uint64_t>();
    info.epoch = header.at("epoch").get<std::size_t>();
    info.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  Model model(config, info.seed);
  auto params = model.parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) {
    throw DataError("checkpoint lists " + std::to_string(tensors.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, t] = params[i];
    if (tensors[i].at("name").get<std::string>() != name ||
        tensors[i].at("shape").get<autodiff::Shape>() != t->shape()) {
      throw DataError("checkpoint tensor " + std::to_string(i) + " does not match parameter " + name);
    }
    auto v = t->values();
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
      throw DataError("checkpoint truncated in tensor " + name);
    }
  }
  return {std::move(model), std::move(info)};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace factuality::models
