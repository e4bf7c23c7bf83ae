#include "qe/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace qe {
namespace {

constexpr const char* kPredictorMagic = "qe-predictor 1";
constexpr const char* kEnsembleMagic = "qe-ensemble 1";

[[noreturn]] void bad_file(const std::string& path, const std::string& why) {
  throw QEError(ErrorCode::ParseError, path + ": " + why);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw QEError(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw QEError(ErrorCode::IoError, "cannot read " + path);
  return in;
}

// Line-oriented reader: every get_* call consumes exactly one line and
// validates its leading keyword, so format drift fails loudly with context.
struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  std::string next_line() {
    std::string line;
    if (!std::getline(in, line)) bad_file(path, "unexpected end of file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // "key rest-of-line"; checks the key and returns the rest.
  std::string expect(const std::string& key) {
    const std::string line = next_line();
    if (line.size() < key.size() || line.compare(0, key.size(), key) != 0 ||
        (line.size() > key.size() && line[key.size()] != ' ')) {
      bad_file(path, "line " + std::to_string(line_no) + ": expected '" + key + " ...'");
    }
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  }

  long expect_int(const std::string& key) {
    const std::string text = expect(key);
    try {
      return std::stol(text);
    } catch (const std::exception&) {
      bad_file(path, "line " + std::to_string(line_no) + ": '" + text + "' is not an integer");
    }
  }

  double expect_double(const std::string& key) { return parse_double(expect(key)); }

  double parse_double(const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) {
      bad_file(path, "line " + std::to_string(line_no) + ": '" + text + "' is not a number");
    }
    return v;
  }

  Vector parse_vector(const std::string& text, int expected_size) {
    std::istringstream stream(text);
    std::vector<double> values;
    std::string cell;
    while (stream >> cell) values.push_back(parse_double(cell));
    if (static_cast<int>(values.size()) != expected_size) {
      bad_file(path, "line " + std::to_string(line_no) + ": expected " +
                         std::to_string(expected_size) + " numbers, got " +
                         std::to_string(values.size()));
    }
    return Eigen::Map<const Vector>(values.data(), expected_size);
  }
};

void write_vector(std::ofstream& out, const Eigen::Ref<const Vector>& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_exact(v(i));
  }
  out << '\n';
}

InputSetting setting_from_name(const std::string& name, const std::string& path) {
  if (name == "SRC_MT") return InputSetting::SrcMt;
  if (name == "MT") return InputSetting::Mt;
  if (name == "MT_MT") return InputSetting::MtMt;
  bad_file(path, "unknown input setting '" + name + "'");
}

void write_tree(std::ofstream& out, const RegressionTree& tree) {
  out << "tree " << tree.nodes.size() << '\n';
  for (const RegressionTree::Node& n : tree.nodes) {
    out << n.feature << ' ' << format_exact(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
        << format_exact(n.value) << '\n';
  }
}

RegressionTree read_tree(LineReader& reader) {
  const long count = reader.expect_int("tree");
  if (count < 1) bad_file(reader.path, "tree must have at least one node");
  RegressionTree tree;
  tree.nodes.resize(count);
  for (long i = 0; i < count; ++i) {
    const std::string line = reader.next_line();
    std::istringstream stream(line);
    std::string feature, threshold, left, right, value;
    if (!(stream >> feature >> threshold >> left >> right >> value)) {
      bad_file(reader.path, "line " + std::to_string(reader.line_no) + ": malformed tree node");
    }
    RegressionTree::Node& n = tree.nodes[i];
    try {
      n.feature = std::stoi(feature);
      n.left = std::stoi(left);
      n.right = std::stoi(right);
    } catch (const std::exception&) {
      bad_file(reader.path, "line " + std::to_string(reader.line_no) + ": malformed tree node");
    }
    n.threshold = reader.parse_double(threshold);
    n.value = reader.parse_double(value);
    const long max_child = count - 1;
    if (n.feature >= 0 && (n.left < 0 || n.right < 0 || n.left > max_child || n.right > max_child)) {
      bad_file(reader.path, "line " + std::to_string(reader.line_no) + ": child index out of range");
    }
  }
  return tree;
}

}  // namespace

std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_predictor(const PredictorModel& model, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kPredictorMagic << '\n';
  out << "setting " << to_string(model.setting) << '\n';

  if (const auto* hashed = std::get_if<HashedBagEncoder>(&model.encoder)) {
    out << "encoder hashed\n";
    out << "buckets " << hashed->buckets() << '\n';
    out << "dim " << hashed->dim() << '\n';
    out << "init_scale " << format_exact(hashed->init_scale()) << '\n';
    out << "init_seed " << hashed->init_seed() << '\n';
    out << "untouched_scale " << format_exact(hashed->untouched_scale()) << '\n';
    out << "head_b " << format_exact(model.head.b) << '\n';
    out << "head_w ";
    write_vector(out, model.head.w);

    // Columns differing from scaled-initial are exactly those training
    // updated; everything else regenerates from the seed at load time.
    const Matrix baseline = HashedBagEncoder::initial_table(hashed->buckets(), hashed->dim(),
                                                            hashed->init_scale(),
                                                            hashed->init_seed()) *
                            hashed->untouched_scale();
    std::vector<int> changed;
    for (int c = 0; c < hashed->buckets(); ++c) {
      if (hashed->table().col(c) != baseline.col(c)) changed.push_back(c);
    }
    out << "changed_columns " << changed.size() << '\n';
    for (int c : changed) {
      out << c << ' ';
      write_vector(out, hashed->table().col(c));
    }
  } else if (const auto* file_ptr = std::get_if<FileEmbeddingEncoder>(&model.encoder)) {
    const auto& file_enc = *file_ptr;
    out << "encoder file\n";
    out << "dim " << file_enc.dim() << '\n';
    out << "head_b " << format_exact(model.head.b) << '\n';
    out << "head_w ";
    write_vector(out, model.head.w);
    out << "entries " << file_enc.vectors().size() << '\n';
    for (const auto& [key, vec] : file_enc.vectors()) {
      out << key.first << ' ' << to_string(key.second) << ' ';
      write_vector(out, vec);
    }
  } else {
    throw QEError(ErrorCode::NotFitted, "predictor has no encoder; nothing to save");
  }
  if (!out) throw QEError(ErrorCode::IoError, "write to " + path + " failed");
}

PredictorModel load_predictor(const std::string& path) {
  LineReader reader{open_in(path), path};
  if (reader.next_line() != kPredictorMagic) bad_file(path, "not a predictor checkpoint");
  const InputSetting setting = setting_from_name(reader.expect("setting"), path);
  const std::string kind = reader.expect("encoder");

  if (kind == "hashed") {
    const int buckets = static_cast<int>(reader.expect_int("buckets"));
    const int dim = static_cast<int>(reader.expect_int("dim"));
    const double init_scale = reader.expect_double("init_scale");
    const std::uint64_t init_seed = static_cast<std::uint64_t>(reader.expect_int("init_seed"));
    const double untouched_scale = reader.expect_double("untouched_scale");

    EncoderSpec spec;
    spec.kind = EncoderSpec::Kind::HashedBag;
    spec.buckets = buckets;
    spec.dim = dim;
    spec.init_scale = init_scale;
    spec.init_seed = init_seed;
    PredictorModel model = make_predictor(setting, spec);

    model.head.b = reader.expect_double("head_b");
    model.head.w = reader.parse_vector(reader.expect("head_w"), dim);

    auto& hashed = std::get<HashedBagEncoder>(model.encoder);
    hashed.table() *= untouched_scale;
    hashed.set_untouched_scale(untouched_scale);
    const long changed = reader.expect_int("changed_columns");
    for (long i = 0; i < changed; ++i) {
      const std::string line = reader.next_line();
      const std::size_t space = line.find(' ');
      if (space == std::string::npos) {
        bad_file(path, "line " + std::to_string(reader.line_no) + ": malformed column row");
      }
      int col = 0;
      try {
        col = std::stoi(line.substr(0, space));
      } catch (const std::exception&) {
        bad_file(path, "line " + std::to_string(reader.line_no) + ": bad column index");
      }
      if (col < 0 || col >= buckets) {
        bad_file(path, "line " + std::to_string(reader.line_no) + ": column index out of range");
      }
      hashed.table().col(col) = reader.parse_vector(line.substr(space + 1), dim);
    }
    return model;
  }

  if (kind == "file") {
    const int dim = static_cast<int>(reader.expect_int("dim"));
    const double head_b = reader.expect_double("head_b");
    const Vector head_w = reader.parse_vector(reader.expect("head_w"), dim);
    const long entries = reader.expect_int("entries");
    std::map<FileEmbeddingEncoder::Key, Vector> vectors;
    for (long i = 0; i < entries; ++i) {
      const std::string line = reader.next_line();
      std::istringstream stream(line);
      std::string id_text, origin_text;
      if (!(stream >> id_text >> origin_text)) {
        bad_file(path, "line " + std::to_string(reader.line_no) + ": malformed entry row");
      }
      std::string rest;
      std::getline(stream, rest);
      int record_id = 0;
      try {
        record_id = std::stoi(id_text);
      } catch (const std::exception&) {
        bad_file(path, "line " + std::to_string(reader.line_no) + ": bad record id");
      }
      vectors.emplace(FileEmbeddingEncoder::Key{record_id, setting_from_name(origin_text, path)},
                      reader.parse_vector(rest, dim));
    }
    PredictorModel model;
    model.setting = setting;
    model.encoder = FileEmbeddingEncoder(dim, std::move(vectors));
    model.head.b = head_b;
    model.head.w = head_w;
    return model;
  }

  bad_file(path, "unknown encoder kind '" + kind + "'");
}

void save_ensemble(const EnsembleModel& model, const std::string& path) {
  if (!model.fitted()) throw QEError(ErrorCode::NotFitted, "refusing to save an unfitted ensemble");
  std::ofstream out = open_out(path);
  out << kEnsembleMagic << '\n';
  out << "kind " << to_string(model.kind()) << '\n';

  if (const auto* gbrt = std::get_if<GBRTModel>(&model.model)) {
    out << "init_value " << format_exact(gbrt->init_value) << '\n';
    out << "learning_rate " << format_exact(gbrt->learning_rate) << '\n';
    out << "staged_sse " << gbrt->staged_training_sse.size() << '\n';
    for (std::size_t i = 0; i < gbrt->staged_training_sse.size(); ++i) {
      if (i) out << ' ';
      out << format_exact(gbrt->staged_training_sse[i]);
    }
    out << '\n';
    out << "trees " << gbrt->trees.size() << '\n';
    for (const RegressionTree& tree : gbrt->trees) write_tree(out, tree);
  } else if (const auto* boost = std::get_if<AdaBoostR2Model>(&model.model)) {
    out << "stages " << boost->stages.size() << '\n';
    for (const AdaBoostR2Model::Stage& stage : boost->stages) {
      out << "stage " << format_exact(stage.weight) << '\n';
      write_tree(out, stage.tree);
    }
  }
  if (!out) throw QEError(ErrorCode::IoError, "write to " + path + " failed");
}

EnsembleModel load_ensemble(const std::string& path) {
  LineReader reader{open_in(path), path};
  if (reader.next_line() != kEnsembleMagic) bad_file(path, "not an ensemble checkpoint");
  const EnsembleKind kind = ensemble_kind_from_string(reader.expect("kind"));

  EnsembleModel model;
  switch (kind) {
    case EnsembleKind::Average:
      model.model = AverageModel{};
      break;
    case EnsembleKind::Gbrt: {
      GBRTModel gbrt;
      gbrt.init_value = reader.expect_double("init_value");
      gbrt.learning_rate = reader.expect_double("learning_rate");
      const long sse_count = reader.expect_int("staged_sse");
      const Vector sse = reader.parse_vector(reader.next_line(), static_cast<int>(sse_count));
      gbrt.staged_training_sse.assign(sse.data(), sse.data() + sse.size());
      const long n_trees = reader.expect_int("trees");
      gbrt.trees.reserve(n_trees);
      for (long i = 0; i < n_trees; ++i) gbrt.trees.push_back(read_tree(reader));
      model.model = std::move(gbrt);
      break;
    }
    case EnsembleKind::AdaBoostR2: {
      AdaBoostR2Model boost;
      const long n_stages = reader.expect_int("stages");
      boost.stages.reserve(n_stages);
      for (long i = 0; i < n_stages; ++i) {
        AdaBoostR2Model::Stage stage;
        stage.weight = reader.expect_double("stage");
        stage.tree = read_tree(reader);
        boost.stages.push_back(std::move(stage));
      }
      model.model = std::move(boost);
      break;
    }
  }
  return model;
}

}  // namespace qe
