#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "graphssl/clustering.hpp"
#include "graphssl/dataset.hpp"
#include "graphssl/errors.hpp"
#include "graphssl/experiment.hpp"
#include "graphssl/graph.hpp"
#include "io_util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

graphssl::DataFormat resolve_format(const std::string& flag,
                                    const std::string& path) {
  if (flag == "csv") return graphssl::DataFormat::Csv;
  if (flag == "binary") return graphssl::DataFormat::DenseBinary;
  if (flag != "auto") {
    throw graphssl::ConfigError("unknown --format '" + flag +
                                "' (expected csv, binary or auto)");
  }
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin") {
    return graphssl::DataFormat::DenseBinary;
  }
  return graphssl::DataFormat::Csv;
}

std::vector<std::string> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw graphssl::DataError(graphssl::DataError::Code::Io,
                              "cannot open '" + path + "'");
  }
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = graphssl::detail::trim(line);
    if (!t.empty()) labels.push_back(t);
  }
  if (labels.empty()) {
    throw graphssl::DataError(graphssl::DataError::Code::EmptyFile,
                              "no labels in '" + path + "'");
  }
  return labels;
}

int run_command(const std::string& data_path, const std::string& format,
                const std::string& config_path, const std::string& out_path) {
  const graphssl::ExperimentConfig cfg = graphssl::load_config(config_path);
  const graphssl::DataSet ds =
      graphssl::load_dataset(data_path, resolve_format(format, data_path));
  const graphssl::ExperimentResult result = graphssl::run_experiment(ds, cfg);

  std::ofstream out(out_path);
  if (!out) {
    throw graphssl::DataError(graphssl::DataError::Code::Io,
                              "cannot write '" + out_path + "'");
  }
  out << result.to_csv();
  if (!out) {
    throw graphssl::DataError(graphssl::DataError::Code::Io,
                              "write failed for '" + out_path + "'");
  }
  return kExitOk;
}

int graph_command(const std::string& data_path, const std::string& format,
                  const std::string& config_path, const std::string& out_path) {
  const graphssl::ExperimentConfig cfg = graphssl::load_config(config_path);
  graphssl::DataSet ds =
      graphssl::load_dataset(data_path, resolve_format(format, data_path));
  if (cfg.normalize) graphssl::normalize_max(ds);

  graphssl::AffinityGraph graph = [&] {
    switch (cfg.algorithm) {
      case graphssl::Algorithm::Lgnmf:
      case graphssl::Algorithm::Lgsc:
        return graphssl::label_weight_graph(ds);
      case graphssl::Algorithm::Fgnmf:
      case graphssl::Algorithm::Fgsc:
        return graphssl::build_learned_graph(ds, cfg.knn_k,
                                             cfg.kiss_regularization,
                                             cfg.sigma_override);
      case graphssl::Algorithm::Gnmf:
      case graphssl::Algorithm::Gsc:
        return graphssl::unsupervised_gaussian_graph(ds, cfg.knn_k,
                                                     cfg.sigma_override);
      default:
        throw graphssl::ConfigError("algorithm 'kmeans' does not use a graph");
    }
  }();
  graphssl::save_graph(graph, out_path);
  return kExitOk;
}

int eval_command(const std::string& pred_path, const std::string& truth_path) {
  const auto pred = read_label_file(pred_path);
  const auto truth = read_label_file(truth_path);
  if (pred.size() != truth.size()) {
    throw graphssl::DataError("prediction and truth files differ in length (" +
                              std::to_string(pred.size()) + " vs " +
                              std::to_string(truth.size()) + ")");
  }
  const graphssl::AccuracyReport report = graphssl::accuracy(pred, truth);
  std::cout << "ac=" << graphssl::detail::format_double(report.ac) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphssl: semi-supervised representation learning on learned "
               "affinity graphs"};
  app.require_subcommand(1);

  std::string data_path, config_path, out_path, pred_path, truth_path;
  std::string format = "auto";

  auto* run = app.add_subcommand(
      "run", "run a clustering experiment and write a result CSV");
  run->add_option("--data", data_path, "dataset file")->required();
  run->add_option("--config", config_path, "experiment config")->required();
  run->add_option("--out", out_path, "output CSV path")->required();
  run->add_option("--format", format, "dataset format: csv, binary or auto");

  auto* graph = app.add_subcommand(
      "graph", "build the configured affinity graph and write its triplets");
  graph->add_option("--data", data_path, "dataset file")->required();
  graph->add_option("--config", config_path, "experiment config")->required();
  graph->add_option("--out", out_path, "output graph path")->required();
  graph->add_option("--format", format, "dataset format: csv, binary or auto");

  auto* eval = app.add_subcommand(
      "eval", "clustering accuracy of a prediction against ground truth");
  eval->add_option("--pred", pred_path, "predicted labels, one per line")
      ->required();
  eval->add_option("--truth", truth_path, "true labels, one per line")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return run_command(data_path, format, config_path, out_path);
    }
    if (graph->parsed()) {
      return graph_command(data_path, format, config_path, out_path);
    }
    return eval_command(pred_path, truth_path);
  } catch (const graphssl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const graphssl::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
