#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qe/checkpoint.hpp"
#include "qe/config.hpp"
#include "qe/dataset.hpp"
#include "qe/ensemble.hpp"
#include "qe/metrics.hpp"
#include "qe/predictor.hpp"
#include "qe/rng.hpp"
#include "qe/ter.hpp"
#include "qe/translation.hpp"
#include "qe/types.hpp"
#include "qe/zero_shot.hpp"

namespace fs = std::filesystem;
using namespace qe;

namespace {

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> read_text_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QEError(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ofstream open_out_file(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw QEError(ErrorCode::IoError, "cannot write " + path);
  return out;
}

void finish_out_file(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw QEError(ErrorCode::IoError, "write to " + path + " failed");
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cells;
}

double parse_double_strict(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw QEError(ErrorCode::ParseError, where + ": '" + text + "' is not a number");
  }
  return v;
}

// A column of per-record scores keyed by record id, read from either a
// predictions TSV (record_id + named columns), a corpus TSV (hter column,
// ids implicit in row order), or a bare one-float-per-line file.
struct ScoreColumn {
  std::vector<int> ids;
  std::vector<double> values;
};

ScoreColumn read_scores(const std::string& path, const std::string& column) {
  const std::vector<std::string> lines = read_text_lines(path);
  if (lines.empty()) throw QEError(ErrorCode::EmptyInput, path + " is empty");

  ScoreColumn out;
  const std::vector<std::string> header = split_tabs(lines[0]);
  if (header.size() > 1 && header[0] == "record_id") {
    int col = -1;
    for (std::size_t i = 1; i < header.size(); ++i) {
      if (header[i] == column) col = static_cast<int>(i);
    }
    if (col < 0) {
      throw QEError(ErrorCode::MissingColumn, path + " has no column '" + column + "'");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const std::vector<std::string> cells = split_tabs(lines[i]);
      if (cells.size() != header.size()) {
        throw QEError(ErrorCode::ParseError, path + ":" + std::to_string(i + 1) +
                                                 ": expected " + std::to_string(header.size()) +
                                                 " cells, got " + std::to_string(cells.size()));
      }
      const std::string where = path + ":" + std::to_string(i + 1);
      out.ids.push_back(static_cast<int>(parse_double_strict(cells[0], where)));
      out.values.push_back(parse_double_strict(cells[col], where));
    }
    return out;
  }

  if (header.size() > 1) {
    // Corpus TSV: delegate parsing, then lift the gold labels.
    const Corpus corpus = load_tsv(path, LanguagePair{"xx", "yy"}, Split::Test);
    for (const QERecord& rec : corpus.records) {
      if (!rec.hter) {
        throw QEError(ErrorCode::NoLabels,
                      path + ": record " + std::to_string(rec.id) + " has no hter value");
      }
      out.ids.push_back(rec.id);
      out.values.push_back(rec.hter->value);
    }
    return out;
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.ids.push_back(static_cast<int>(out.values.size()));
    out.values.push_back(parse_double_strict(lines[i], path + ":" + std::to_string(i + 1)));
  }
  return out;
}

// Pairs up scores by record id; gold rows are addressed by their id order.
std::pair<Vector, Vector> align_scores(const ScoreColumn& pred, const ScoreColumn& gold) {
  if (pred.values.size() != gold.values.size()) {
    throw QEError(ErrorCode::LengthMismatch,
                  "prediction count " + std::to_string(pred.values.size()) +
                      " does not match gold count " + std::to_string(gold.values.size()));
  }
  std::map<int, double> gold_by_id;
  for (std::size_t i = 0; i < gold.ids.size(); ++i) gold_by_id[gold.ids[i]] = gold.values[i];
  Vector p(pred.values.size()), g(pred.values.size());
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const auto it = gold_by_id.find(pred.ids[i]);
    if (it == gold_by_id.end()) {
      throw QEError(ErrorCode::LengthMismatch,
                    "no gold value for record " + std::to_string(pred.ids[i]));
    }
    p(static_cast<int>(i)) = pred.values[i];
    g(static_cast<int>(i)) = it->second;
  }
  return {std::move(p), std::move(g)};
}

const char* setting_suffix(InputSetting s) {
  switch (s) {
    case InputSetting::SrcMt: return "srcmt";
    case InputSetting::Mt: return "mt";
    case InputSetting::MtMt: return "mtmt";
  }
  return "?";
}

void write_loss_trace(const LossTrace& trace, const std::string& path) {
  std::ofstream out = open_out_file(path);
  out << "epoch\tmean_loss\n";
  for (std::size_t e = 0; e < trace.epoch_mean_loss.size(); ++e) {
    out << e << '\t' << format6(trace.epoch_mean_loss[e]) << '\n';
  }
  finish_out_file(out, path);
}

void write_predictions(const std::string& path, const std::vector<int>& ids,
                       const Matrix& features, const Vector& combined) {
  std::ofstream out = open_out_file(path);
  out << "record_id\tpred_srcmt\tpred_mt\tpred_mtmt\tpred_ensemble\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int r = static_cast<int>(i);
    out << ids[i] << '\t' << format6(features(r, 0)) << '\t' << format6(features(r, 1)) << '\t'
        << format6(features(r, 2)) << '\t' << format6(combined(r)) << '\n';
  }
  finish_out_file(out, path);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) {
    throw QEError(ErrorCode::InvalidConfig, "no output directory (set out_dir or pass --out)");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw QEError(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
}

Corpus load_labeled_train(const RunConfig& config) {
  if (config.data_train.empty()) {
    throw QEError(ErrorCode::InvalidConfig, "data.train is not set");
  }
  Corpus corpus = load_tsv(config.data_train, config.parsed_pair(), Split::Train);
  for (const QERecord& rec : corpus.records) {
    if (!rec.hter) {
      throw QEError(ErrorCode::NoLabels, config.data_train + ": record " +
                                             std::to_string(rec.id) +
                                             " has no hter label; training needs labeled data");
    }
  }
  return corpus;
}

// --------------------------------------------------------------------------

struct LabelArgs {
  std::string mt_path;
  std::string pe_path;
  std::string out_path;
  std::string report_path;
  ShiftConfig shift;
};

void run_label(const LabelArgs& args) {
  const std::vector<std::string> mt_lines = read_text_lines(args.mt_path);
  const std::vector<std::string> pe_lines = read_text_lines(args.pe_path);
  if (mt_lines.size() != pe_lines.size()) {
    throw QEError(ErrorCode::LineCountMismatch,
                  args.mt_path + " has " + std::to_string(mt_lines.size()) + " lines but " +
                      args.pe_path + " has " + std::to_string(pe_lines.size()));
  }

  std::ostringstream scores, reports;
  for (std::size_t i = 0; i < mt_lines.size(); ++i) {
    const TokenSeq mt = normalize(mt_lines[i]);
    const TokenSeq pe = normalize(pe_lines[i]);
    const TERAlignment alignment = compute_ter(mt, pe, args.shift);
    scores << format6(HTERLabel::clamped(alignment.score).value) << '\n';
    if (!args.report_path.empty()) reports << ter_report_line(alignment) << '\n';
  }

  if (args.out_path.empty()) {
    std::cout << scores.str();
  } else {
    std::ofstream out = open_out_file(args.out_path);
    out << scores.str();
    finish_out_file(out, args.out_path);
  }
  if (!args.report_path.empty()) {
    std::ofstream out = open_out_file(args.report_path);
    out << reports.str();
    finish_out_file(out, args.report_path);
  }
}

struct ConfigArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;

  RunConfig load() const {
    RunConfig config = RunConfig::from_file(config_path);
    if (seed_override) config.seed = *seed_override;
    if (!out_override.empty()) config.out_dir = out_override;
    return config;
  }
};

void run_train(const ConfigArgs& args) {
  const RunConfig config = args.load();
  ensure_dir(config.out_dir);
  const Corpus corpus = load_labeled_train(config);
  const BuilderConfig builder = config.make_builder();

  for (const InputSetting setting : config.settings) {
    PredictorModel model = make_predictor(setting, config.encoder);
    TrainConfig tc = config.train;
    tc.seed = mix_seed(config.seed, static_cast<std::uint64_t>(setting));
    const LossTrace trace = train(model, corpus, builder, tc);

    const std::string suffix = setting_suffix(setting);
    save_predictor(model, config.out_dir + "/predictor_" + suffix + ".txt");
    write_loss_trace(trace, config.out_dir + "/loss_" + suffix + ".txt");
  }
  config.write_manifest(config.out_dir + "/manifest.txt");
  std::cout << "trained " << config.settings.size() << " predictor(s) into " << config.out_dir
            << "\n";
}

void write_stack_outputs(const StackResult& stacked, const Corpus& corpus,
                         const RunConfig& config) {
  for (const PredictorModel& model : stacked.components) {
    save_predictor(model,
                   config.out_dir + "/predictor_" + std::string(setting_suffix(model.setting)) +
                       ".txt");
  }
  save_ensemble(stacked.combiner, config.out_dir + "/ensemble.txt");

  const std::string oof_path = config.out_dir + "/oof_features.tsv";
  std::ofstream oof = open_out_file(oof_path);
  oof << "record_id\tfold\tpred_srcmt\tpred_mt\tpred_mtmt\tgold\n";
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const int r = static_cast<int>(i);
    oof << corpus.records[i].id << '\t' << stacked.fold_of_record[i] << '\t'
        << format6(stacked.oof_features(r, 0)) << '\t' << format6(stacked.oof_features(r, 1))
        << '\t' << format6(stacked.oof_features(r, 2)) << '\t' << format6(stacked.oof_gold(r))
        << '\n';
  }
  finish_out_file(oof, oof_path);
  config.write_manifest(config.out_dir + "/manifest.txt");
}

void run_ensemble(const ConfigArgs& args) {
  const RunConfig config = args.load();
  ensure_dir(config.out_dir);
  const Corpus corpus = load_labeled_train(config);
  const BuilderConfig builder = config.make_builder();

  const StackResult stacked = stack_train(corpus, builder, config.make_stack());
  write_stack_outputs(stacked, corpus, config);
  std::cout << "stacked " << to_string(stacked.combiner.kind()) << " ensemble over "
            << corpus.records.size() << " records into " << config.out_dir << "\n";
}

struct PredictArgs {
  std::string model_dir;
  std::string data_path;
  std::string out_path;
  std::optional<std::uint64_t> seed_override;
};

void run_predict(const PredictArgs& args) {
  const RunConfig config = RunConfig::from_file(args.model_dir + "/manifest.txt");
  const std::uint64_t seed = args.seed_override.value_or(config.seed);
  const BuilderConfig builder = config.make_builder();

  std::vector<PredictorModel> components;
  for (const char* suffix : {"srcmt", "mt", "mtmt"}) {
    components.push_back(
        load_predictor(args.model_dir + "/predictor_" + std::string(suffix) + ".txt"));
  }
  const EnsembleModel combiner = load_ensemble(args.model_dir + "/ensemble.txt");

  const Corpus corpus = load_tsv(args.data_path, config.parsed_pair(), Split::Test);
  const Matrix features =
      component_features(components, corpus, builder, mix_seed(seed, 0x9Eu));
  const Vector combined = ensemble_predict(combiner, features);

  std::vector<int> ids;
  ids.reserve(corpus.records.size());
  for (const QERecord& rec : corpus.records) ids.push_back(rec.id);

  if (args.out_path.empty()) {
    std::cout << "record_id\tpred_srcmt\tpred_mt\tpred_mtmt\tpred_ensemble\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int r = static_cast<int>(i);
      std::cout << ids[i] << '\t' << format6(features(r, 0)) << '\t' << format6(features(r, 1))
                << '\t' << format6(features(r, 2)) << '\t' << format6(combined(r)) << '\n';
    }
  } else {
    write_predictions(args.out_path, ids, features, combined);
    std::cout << "wrote " << ids.size() << " predictions to " << args.out_path << "\n";
  }
}

struct EvaluateArgs {
  std::string pred_path;
  std::string gold_path;
  std::string column = "pred_ensemble";
  std::string out_path;
};

void run_evaluate(const EvaluateArgs& args) {
  const ScoreColumn pred = read_scores(args.pred_path, args.column);
  const ScoreColumn gold = read_scores(args.gold_path, "hter");
  const auto [p, g] = align_scores(pred, gold);
  const EvalReport report = evaluate(p, g);

  std::cout << "n=" << report.n << "\n";
  std::cout << "pearson=" << format6(report.pearson) << "  # higher is better\n";
  std::cout << "spearman=" << format6(report.spearman) << "  # higher is better\n";
  std::cout << "mae=" << format6(report.mae) << "  # lower is better\n";
  std::cout << "rmse=" << format6(report.rmse) << "  # lower is better\n";

  if (!args.out_path.empty()) {
    std::ofstream out = open_out_file(args.out_path);
    out << report.to_key_value();
    finish_out_file(out, args.out_path);
  }
}

struct PlotDataArgs {
  std::string pred_path;
  std::string gold_path;
  std::string column = "pred_ensemble";
  std::string out_path;
};

void run_plot_data(const PlotDataArgs& args) {
  const ScoreColumn pred = read_scores(args.pred_path, args.column);
  const ScoreColumn gold = read_scores(args.gold_path, "hter");
  const auto [p, g] = align_scores(pred, gold);

  std::vector<int> order(pred.ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return pred.ids[a] < pred.ids[b]; });

  std::ostringstream csv;
  csv << "index,gold,predicted\n";
  for (const int i : order) {
    csv << pred.ids[i] << ',' << format6(g(i)) << ',' << format6(p(i)) << '\n';
  }
  if (args.out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out = open_out_file(args.out_path);
    out << csv.str();
    finish_out_file(out, args.out_path);
  }
}

void write_provenance(const Corpus& corpus, const std::string& path) {
  std::ofstream out = open_out_file(path);
  out << "record_id\tprovenance\torigin_pair\n";
  for (const QERecord& rec : corpus.records) {
    out << rec.id << '\t'
        << (rec.provenance == QERecord::Provenance::Pseudo ? "pseudo" : "wmt") << '\t'
        << rec.origin_pair << '\n';
  }
  finish_out_file(out, path);
}

void run_zero_shot(const ConfigArgs& args) {
  const RunConfig config = args.load();
  ensure_dir(config.out_dir);

  const LanguagePair test_pair = config.parsed_test_pair();
  std::vector<Corpus> available;
  for (const auto& [pair, path] : config.parsed_corpora()) {
    available.push_back(load_tsv(path, pair, Split::Train));
  }
  const std::vector<Corpus> relevant = select_relevant_pairs(available, test_pair);

  std::unique_ptr<TranslationClient> client;
  if (config.zero_shot_client == "http") {
    HttpClientConfig http;
    http.host = config.zero_shot_http_host;
    http.port = config.zero_shot_http_port;
    http.endpoint = config.zero_shot_http_endpoint;
    http.requests_per_second = config.zero_shot_rps;
    http.max_retries = config.zero_shot_max_retries;
    http.cache_path = config.zero_shot_cache;
    client = std::make_unique<HttpTranslationClient>(http);
  } else {
    client = std::make_unique<FileBackedMockClient>(config.zero_shot_cache);
  }
  const ClientFailurePolicy policy = config.zero_shot_on_failure == "skip"
                                         ? ClientFailurePolicy::Skip
                                         : ClientFailurePolicy::Abort;

  std::vector<PseudoReferenceRecord> pseudo;
  for (const Corpus& corpus : relevant) {
    std::vector<PseudoReferenceRecord> batch =
        generate_pseudo_references(corpus, *client, {}, config.ter, policy);
    std::move(batch.begin(), batch.end(), std::back_inserter(pseudo));
  }

  const Corpus merged = merge_for_zero_shot(relevant, pseudo);
  write_tsv(merged, config.out_dir + "/merged.tsv");
  write_provenance(merged, config.out_dir + "/provenance.tsv");

  const auto [train_part, dev_part] =
      split_for_dev(merged, config.zero_shot_dev_fraction, config.seed);
  write_tsv(train_part, config.out_dir + "/train.tsv");
  write_tsv(dev_part, config.out_dir + "/dev.tsv");

  const BuilderConfig builder = config.make_builder();
  const StackResult stacked = stack_train(train_part, builder, config.make_stack());
  write_stack_outputs(stacked, train_part, config);

  if (dev_part.records.size() >= 2) {
    const Matrix features = component_features(stacked.components, dev_part, builder,
                                               mix_seed(config.seed, 0x9Eu));
    const Vector combined = ensemble_predict(stacked.combiner, features);
    std::vector<int> ids;
    for (const QERecord& rec : dev_part.records) ids.push_back(rec.id);
    write_predictions(config.out_dir + "/dev_predictions.tsv", ids, features, combined);

    Vector dev_gold(static_cast<int>(dev_part.records.size()));
    for (std::size_t i = 0; i < dev_part.records.size(); ++i) {
      dev_gold(static_cast<int>(i)) = dev_part.records[i].hter->value;
    }
    const std::string eval_path = config.out_dir + "/dev_eval.txt";
    std::ofstream out = open_out_file(eval_path);
    try {
      out << evaluate(combined, dev_gold).to_key_value();
    } catch (const QEError& e) {
      out << "evaluation skipped: " << e.what() << "\n";
    }
    finish_out_file(out, eval_path);
  }

  std::cout << "zero-shot corpus for " << test_pair.name() << ": " << merged.records.size()
            << " records (" << pseudo.size() << " pseudo) from " << relevant.size()
            << " relevant pair(s); live translation calls: " << client->live_calls() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-level MT quality estimation: edit-rate labeling, sigmoid-head "
               "regressors over three input settings, stacked ensembles, and zero-shot "
               "data augmentation"};
  app.require_subcommand(1);

  LabelArgs label_args;
  CLI::App* label = app.add_subcommand("label", "Score translations against post-edits");
  label->add_option("--mt", label_args.mt_path, "translation file, one sentence per line")
      ->required();
  label->add_option("--pe", label_args.pe_path, "post-edit file, one sentence per line")
      ->required();
  label->add_option("--out", label_args.out_path, "output file (default: stdout)");
  label->add_option("--report", label_args.report_path, "also write per-line score reports here");
  label->add_option("--max-block-size", label_args.shift.max_block_size,
                    "largest shiftable block (0 disables shifts)");
  label->add_option("--max-shift-distance", label_args.shift.max_shift_distance,
                    "farthest a block may move");
  label->callback([&] { run_label(label_args); });

  ConfigArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train per-setting predictors");
  train_cmd->add_option("--config", train_args.config_path, "key=value config file")->required();
  train_cmd->add_option("--seed", train_args.seed_override, "override the config seed");
  train_cmd->add_option("--out", train_args.out_override, "override the output directory");
  train_cmd->callback([&] { run_train(train_args); });

  ConfigArgs ensemble_args;
  CLI::App* ensemble_cmd =
      app.add_subcommand("ensemble", "Train the stacked ensemble over all three settings");
  ensemble_cmd->add_option("--config", ensemble_args.config_path, "key=value config file")
      ->required();
  ensemble_cmd->add_option("--seed", ensemble_args.seed_override, "override the config seed");
  ensemble_cmd->add_option("--out", ensemble_args.out_override, "override the output directory");
  ensemble_cmd->callback([&] { run_ensemble(ensemble_args); });

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict scores with a trained ensemble");
  predict_cmd->add_option("--model", predict_args.model_dir, "ensemble output directory")
      ->required();
  predict_cmd->add_option("--data", predict_args.data_path, "corpus TSV to score")->required();
  predict_cmd->add_option("--out", predict_args.out_path, "predictions TSV (default: stdout)");
  predict_cmd->add_option("--seed", predict_args.seed_override, "partner-sampling seed override");
  predict_cmd->callback([&] { run_predict(predict_args); });

  EvaluateArgs evaluate_args;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate_cmd->add_option("--pred", evaluate_args.pred_path, "predictions TSV or float-per-line")
      ->required();
  evaluate_cmd->add_option("--gold", evaluate_args.gold_path, "corpus TSV or float-per-line")
      ->required();
  evaluate_cmd->add_option("--column", evaluate_args.column,
                           "predictions column to evaluate (default pred_ensemble)");
  evaluate_cmd->add_option("--out", evaluate_args.out_path, "also write the report here");
  evaluate_cmd->callback([&] { run_evaluate(evaluate_args); });

  ConfigArgs zero_shot_args;
  CLI::App* zero_shot_cmd = app.add_subcommand(
      "zero-shot", "Build pseudo-labeled training data for an unseen pair and train on it");
  zero_shot_cmd->add_option("--config", zero_shot_args.config_path, "key=value config file")
      ->required();
  zero_shot_cmd->add_option("--seed", zero_shot_args.seed_override, "override the config seed");
  zero_shot_cmd->add_option("--out", zero_shot_args.out_override, "override the output directory");
  zero_shot_cmd->callback([&] { run_zero_shot(zero_shot_args); });

  PlotDataArgs plot_args;
  CLI::App* plot_cmd =
      app.add_subcommand("plot-data", "Emit gold-vs-predicted CSV for external plotting");
  plot_cmd->add_option("--pred", plot_args.pred_path, "predictions TSV or float-per-line")
      ->required();
  plot_cmd->add_option("--gold", plot_args.gold_path, "corpus TSV or float-per-line")->required();
  plot_cmd->add_option("--column", plot_args.column,
                       "predictions column to plot (default pred_ensemble)");
  plot_cmd->add_option("--out", plot_args.out_path, "output CSV (default: stdout)");
  plot_cmd->callback([&] { run_plot_data(plot_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const QEError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
