#include "lgcn/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace lgcn {

namespace {

nlohmann::json tensor_json(const std::string& name, const ad::Tensor& t) {
  return {{"name", name}, {"shape", t.shape()}, {"values", t.values()}};
}

ad::Tensor tensor_from(const nlohmann::json& j) {
  try {
    return ad::Tensor(j.at("shape").get<ad::Shape>(), j.at("values").get<std::vector<double>>());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed tensor: ") + e.what());
  }
}

}  // namespace

std::string checkpoint_text(const Model& model, const ad::Adam& opt, const CheckpointInfo& info) {
  nlohmann::json params = nlohmann::json::array();
  nlohmann::json first = nlohmann::json::array();
  nlohmann::json second = nlohmann::json::array();
  std::size_t i = 0;
  for (const auto& p : model.parameters().all()) {
    params.push_back(tensor_json(p.name, p.value));
    first.push_back(tensor_json(p.name, opt.first_moments()[i]));
    second.push_back(tensor_json(p.name, opt.second_moments()[i]));
    ++i;
  }
  const auto& a = opt.config();
  nlohmann::json j{{"checkpoint_version", kCheckpointVersion},
                   {"dataset_kind", to_string(info.kind)},
                   {"model", model.spec()},
                   {"train", info.train},
                   {"splits",
                    {{"seed", info.split_seed},
                     {"train", info.ratios.train},
                     {"val", info.ratios.val},
                     {"test", info.ratios.test}}},
                   {"num_parameters", model.num_parameters()},
                   {"parameters", params},
                   {"adam",
                    {{"learning_rate", a.learning_rate},
                     {"beta1", a.beta1},
                     {"beta2", a.beta2},
                     {"epsilon", a.epsilon},
                     {"weight_decay", a.weight_decay},
                     {"weight_decay_mode", "coupled-l2"},
                     {"steps", opt.steps()},
                     {"first_moments", first},
                     {"second_moments", second}}}};
  return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const ad::Adam& opt,
                     const CheckpointInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_text(model, opt, info);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

LoadedCheckpoint parse_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("checkpoint_version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + j.at("checkpoint_version").dump());
    }
    CheckpointInfo info;
    info.kind = parse_dataset_kind(j.at("dataset_kind").get<std::string>());
    info.train = j.at("train").get<TrainConfig>();
    const auto& s = j.at("splits");
    info.split_seed = s.at("seed").get<std::uint64_t>();
    info.ratios = {s.at("train").get<double>(), s.at("val").get<double>(), s.at("test").get<double>()};

    Model model(j.at("model").get<ModelSpec>(), info.train.init_seed);
    auto& params = model.parameters();
    const auto& stored = j.at("parameters");
    if (stored.size() != params.size()) {
      throw CheckpointError("checkpoint holds " + std::to_string(stored.size()) + " tensors, model " +
                            model.spec().name() + " needs " + std::to_string(params.size()));
    }
    std::size_t i = 0;
    for (auto& p : params.all()) {
      const auto& e = stored.at(i++);
      if (e.at("name").get<std::string>() != p.name) {
        throw CheckpointError("expected parameter '" + p.name + "', found '" + e.at("name").get<std::string>() + "'");
      }
      ad::Tensor value = tensor_from(e);
      if (value.shape() != p.value.shape()) {
        throw CheckpointError("parameter '" + p.name + "' has shape " + ad::shape_string(value.shape()) +
                              ", model needs " + ad::shape_string(p.value.shape()));
      }
      p.value = std::move(value);
    }
    const auto& a = j.at("adam");
    ad::AdamConfig cfg{a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                       a.at("epsilon").get<double>(), a.at("weight_decay").get<double>()};
    ad::Adam opt(cfg, params);
    std::vector<ad::Tensor> first, second;
    for (const auto& e : a.at("first_moments")) first.push_back(tensor_from(e));
    for (const auto& e : a.at("second_moments")) second.push_back(tensor_from(e));
    try {
      opt.restore(a.at("steps").get<std::uint64_t>(), std::move(first), std::move(second));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(e.what());
    }
    return {std::move(model), std::move(opt), info};
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace lgcn
