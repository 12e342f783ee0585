#include "chirp/model.hpp"

#include <json.hpp>

#include <fstream>

namespace chirp {
namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j, std::size_t expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != expected)
    throw MalformedModel(std::string(what) + " has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(expected));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

StopReason stop_reason_from(const std::string& name) {
  for (StopReason r : {StopReason::TestWorsening, StopReason::TrainStalled, StopReason::TargetReached,
                       StopReason::EpochCap})
    if (stop_reason_name(r) == name) return r;
  throw MalformedModel("unknown stop_reason '" + name + "'");
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const Network& net = model.network;
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["spec"] = {{"inputs", net.spec.inputs},
                 {"hidden_width", net.spec.hidden_width},
                 {"hidden_layers", net.spec.hidden_layers},
                 {"outputs", net.spec.outputs}};

  json slots = json::array();
  json names = json::array();
  for (std::size_t s : net.input_slots) {
    slots.push_back(s);
    names.push_back(slot_names()[s]);
  }
  doc["feature_slots"] = slots;
  doc["feature_names"] = names;
  doc["input_norm"] = {{"mean", vector_json(net.input_mean)}, {"std", vector_json(net.input_std)}};
  doc["labels"] = net.labels;

  json layers = json::array();
  for (const auto& w : net.weights) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"weights", row_major}});
  }
  doc["layers"] = layers;

  const auto& x = model.extraction;
  doc["extraction"] = {{"window", x.window},
                       {"hop", x.hop},
                       {"sample_rate", x.sample_rate},
                       {"mel_filters", x.mel_filters},
                       {"mfcc_coefficients", x.mfcc_coefficients},
                       {"lpc_order", x.lpc_order},
                       {"macro_window", x.macro_window},
                       {"window_kind", x.window_kind == WindowKind::Hann ? "hann" : "rectangular"}};
  doc["seed"] = model.seed;
  doc["stop_reason"] = std::string(stop_reason_name(model.stop_reason));
  out << doc.dump(2) << '\n';
}

void write_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  write_model(out, model);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Model read_model(std::istream& in) {
  try {
    const json doc = json::parse(in);
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw MalformedModel("unsupported format_version " + doc.at("format_version").dump());

    Model model;
    Network& net = model.network;
    const auto& spec = doc.at("spec");
    net.spec = {spec.at("inputs").get<std::size_t>(), spec.at("hidden_width").get<std::size_t>(),
                spec.at("hidden_layers").get<std::size_t>(), spec.at("outputs").get<std::size_t>()};
    net.spec.validate();

    net.input_slots = doc.at("feature_slots").get<std::vector<std::size_t>>();
    for (std::size_t s : net.input_slots)
      if (s >= kSlotCount) throw MalformedModel("feature slot " + std::to_string(s) + " out of range");

    net.input_mean = vector_from(doc.at("input_norm").at("mean"), net.spec.inputs, "input_norm.mean");
    net.input_std = vector_from(doc.at("input_norm").at("std"), net.spec.inputs, "input_norm.std");
    if ((net.input_std.array() <= 0.0).any()) throw MalformedModel("input_norm.std must be positive");
    net.labels = doc.at("labels").get<std::vector<std::string>>();
    if (!net.labels.empty() && net.labels.size() != net.spec.outputs)
      throw MalformedModel("labels does not match spec.outputs");

    const auto sizes = net.spec.layer_sizes();
    const auto& layers = doc.at("layers");
    if (layers.size() + 1 != sizes.size()) throw MalformedModel("layer count does not match spec");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto rows = layers[l].at("rows").get<Eigen::Index>();
      const auto cols = layers[l].at("cols").get<Eigen::Index>();
      if (rows != static_cast<Eigen::Index>(sizes[l] + 1) || cols != static_cast<Eigen::Index>(sizes[l + 1]))
        throw MalformedModel("layer " + std::to_string(l) + " shape does not match spec");
      const auto values = layers[l].at("weights").get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(rows * cols))
        throw MalformedModel("layer " + std::to_string(l) + " has the wrong number of weights");
      net.weights.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), rows, cols));
    }

    const auto& x = doc.at("extraction");
    model.extraction.window = x.at("window").get<std::size_t>();
    model.extraction.hop = x.at("hop").get<std::size_t>();
    model.extraction.sample_rate = x.at("sample_rate").get<int>();
    model.extraction.mel_filters = x.at("mel_filters").get<Eigen::Index>();
    model.extraction.mfcc_coefficients = x.at("mfcc_coefficients").get<Eigen::Index>();
    model.extraction.lpc_order = x.at("lpc_order").get<Eigen::Index>();
    model.extraction.macro_window = x.at("macro_window").get<std::size_t>();
    model.extraction.window_kind =
        x.at("window_kind").get<std::string>() == "rectangular" ? WindowKind::Rectangular : WindowKind::Hann;
    model.extraction.validate();

    model.seed = doc.at("seed").get<std::uint64_t>();
    model.stop_reason = stop_reason_from(doc.at("stop_reason").get<std::string>());
    return model;
  } catch (const MalformedModel&) {
    throw;
  } catch (const Error& e) {
    throw MalformedModel(e.what());
  } catch (const json::exception& e) {
    throw MalformedModel(e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedModel(e.what());
  }
}

Model read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedModel("cannot open " + path.string());
  return read_model(in);
}

}  // namespace chirp
