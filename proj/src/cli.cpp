#include "lgcn/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lgcn/checkpoint.hpp"
#include "lgcn/dataset_io.hpp"

namespace lgcn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string type_name(FieldType t) {
  switch (t) {
    case FieldType::UInt: return "a non-negative integer";
    case FieldType::Number: return "a number";
    case FieldType::Bool: return "a boolean";
    case FieldType::String: return "a string";
    case FieldType::UIntList: return "a list of non-negative integers";
  }
  return "?";
}

bool is_uint(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

bool matches(const Field& f, const json& v) {
  if (v.is_null()) return f.nullable;
  switch (f.type) {
    case FieldType::UInt: return is_uint(v);
    case FieldType::Number: return v.is_number();
    case FieldType::Bool: return v.is_boolean();
    case FieldType::String: return v.is_string();
    case FieldType::UIntList: return v.is_array() && std::all_of(v.begin(), v.end(), is_uint);
  }
  return false;
}

const Field& find_field(const Schema& schema, std::string_view key) {
  for (const auto& f : schema) {
    if (f.name == key) return f;
  }
  std::string known;
  for (const auto& f : schema) known += (known.empty() ? "" : ", ") + f.name;
  throw UsageError("unknown config key '" + std::string(key) + "' (known: " + known + ")");
}

void check_value(const Field& f, const json& v) {
  if (!matches(f, v)) {
    throw UsageError("config key '" + f.name + "' must be " + type_name(f.type) + (f.nullable ? " or null" : "") +
                     ", got " + v.dump());
  }
  if (f.name == "schema_version" && v.get<std::uint64_t>() != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
    throw UsageError("unsupported config schema_version " + v.dump() + " (expected " +
                     std::to_string(kConfigSchemaVersion) + ")");
  }
}

template <typename Fn>
auto as_usage(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

// Creates `dir`, refusing a non-empty one unless `force` is set.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path " + dir.string() + " is not a directory");
    if (!force && !fs::is_empty(dir)) {
      throw UsageError("output directory " + dir.string() + " is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir);
}

void prepare_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force) {
    throw UsageError("output file " + file.string() + " exists; pass --force to overwrite");
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string file_label(std::string_view model) {
  std::string s;
  for (char c : model) s += c == '+' ? 'p' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string dataset_title(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Financial1Hop: return "Financial (1-hop)";
    case DatasetKind::Financial2Hop: return "Financial (2-hop)";
    case DatasetKind::Transport: return "Transportation";
  }
  return "?";
}

std::string summary_table(const Multigraph& g) {
  std::size_t normal = 0, fraud = 0, mule = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    (g.labels()[v] == kFraud ? fraud : normal) += 1;
    if (!g.vertices().hidden_class.empty() && g.vertices().hidden_class[v]) ++mule;
  }
  std::ostringstream s;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %9s %9s %9s %9s %9s %12s\n", "Data Set", "|V|", "|E|", "|N|", "|F|", "|M|",
                "sum|S|");
  s << line;
  const std::string m = g.kind() == DatasetKind::Financial2Hop ? std::to_string(mule) : "-";
  std::snprintf(line, sizeof line, "%-20s %9zu %9zu %9zu %9zu %9s %12zu\n", dataset_title(g.kind()).c_str(),
                g.num_vertices(), g.num_edges(), normal, fraud, m.c_str(), g.sequences().total_length());
  s << line;
  return s.str();
}

std::string loss_csv(const RunReport& r) {
  std::string text = "epoch,train_loss,val_loss\n";
  std::size_t vi = 0;
  for (std::size_t i = 0; i < r.train_loss.size(); ++i) {
    const std::size_t epoch = i + 1;
    text += std::to_string(epoch) + ',';
    append_double(text, r.train_loss[i]);
    text += ',';
    while (vi < r.val_loss.size() && r.val_loss[vi].first < epoch) ++vi;
    if (vi < r.val_loss.size() && r.val_loss[vi].first == epoch) append_double(text, r.val_loss[vi].second);
    text += '\n';
  }
  return text;
}

// Report without wall time, so reruns write identical bytes.
std::string report_text(const RunReport& r) {
  json j = r;
  j.erase("wall_seconds");
  return j.dump(2) + '\n';
}

std::string metrics_line(const std::string& model, std::string_view mode, const Metrics& m) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << model << ' ' << mode << " n=" << m.count << " accuracy=" << m.accuracy << " macro_f1=" << m.macro_f1;
  if (m.auc) s << " auc=" << *m.auc;
  return s.str();
}

Multigraph load_normalized(const fs::path& dir) {
  if (!fs::exists(dir / "meta.json")) throw std::runtime_error("no dataset at " + dir.string());
  return gen::normalize_dataset(load_dataset(dir));
}

LoadedCheckpoint open_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint " + path.string() + " does not exist");
  return load_checkpoint(path);
}

void require_kind(DatasetKind expected, DatasetKind actual, const std::string& what) {
  if (expected != actual) {
    throw std::runtime_error(what + " is " + std::string(to_string(actual)) + " but the checkpoint was trained on " +
                             std::string(to_string(expected)));
  }
}

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_config) {
  if (with_config) {
    cmd->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("-s,--override", o.overrides, "Config assignment key=value (repeatable)");
  }
  cmd->add_option("-o,--out", o.out, "Output path");
  cmd->add_flag("-f,--force", o.force, "Overwrite existing outputs");
}

int cmd_generate(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const json config = resolve_config(generate_schema(), o.config, o.overrides);
  const GenerateSettings s = generate_settings(config);
  const fs::path dir =
      o.out.empty() ? output_root() / (std::string(to_string(s.kind)) + "-seed" + std::to_string(s.gen.seed)) : fs::path(o.out);
  prepare_dir(dir, o.force);
  if (s.gen.n_edges_target == 0) err << "warning: n_edges_target is 0, the dataset will be empty\n";
  err << "generating " << to_string(s.kind) << " with seed " << s.gen.seed << '\n';
  const Multigraph g = gen::generate_financial(s.gen);
  save_dataset(g, dir);
  write_text(dir / "config.json", config.dump(2) + '\n');
  out << summary_table(g);
  err << "wrote " << dir.string() << '\n';
  return kExitOk;
}

struct SeedRun {
  std::uint64_t seed = 0;
  fs::path dir;
  RunReport report;
};

int cmd_train(const CommonOptions& o, const std::string& data, const std::string& seeds_text, std::size_t jobs,
              std::size_t progress_every, std::ostream& out, std::ostream& err) {
  const json config = resolve_config(train_schema(), o.config, o.overrides);
  const TrainSettings s = train_settings(config);
  std::vector<std::uint64_t> seeds =
      seeds_text.empty() ? std::vector<std::uint64_t>{s.train.init_seed} : parse_seed_list(seeds_text);

  const Multigraph g = load_normalized(data);
  const ModelSpec spec = as_usage([&] { return s.spec_for(g.kind()); });
  const TrainConfig base = as_usage([&] { return s.train_for(g.kind()); });
  if (spec.in_features != g.num_features()) {
    throw std::runtime_error("dataset has " + std::to_string(g.num_features()) + " features, model expects " +
                             std::to_string(spec.in_features));
  }
  const GraphContext ctx = make_context(g, s.bucket_boundaries);
  const SplitMask splits = as_usage([&] { return make_splits(g.num_vertices(), s.ratios, s.split_seed); });

  const bool many = !seeds_text.empty();
  const fs::path root = o.out.empty() ? output_root() / (file_label(spec.name()) + (many ? "-seeds" : "-seed" +
                                                                                    std::to_string(seeds.front())))
                                      : fs::path(o.out);
  prepare_dir(root, o.force);
  std::vector<SeedRun> runs(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    runs[i].seed = seeds[i];
    runs[i].dir = many ? root / ("seed_" + std::to_string(seeds[i])) : root;
    if (many) prepare_dir(runs[i].dir, o.force);
  }
  write_text(root / "config.json", config.dump(2) + '\n');

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size() && !failed; i = next++) {
      SeedRun& run = runs[i];
      TrainConfig cfg = base;
      cfg.init_seed = run.seed;
      auto progress = [&](std::size_t epoch, double loss) {
        if (progress_every == 0 || (epoch % progress_every != 0 && epoch != cfg.epochs)) return;
        std::lock_guard lock(log_mutex);
        err << spec.name() << " seed " << run.seed << " epoch " << epoch << '/' << cfg.epochs << " loss " << loss
            << '\n';
      };
      try {
        TrainResult result = train(spec, g, ctx, splits, cfg, progress);
        CheckpointInfo info{g.kind(), cfg, s.split_seed, s.ratios};
        save_checkpoint(run.dir / "checkpoint.json", result.model, result.optimizer, info);
        write_text(run.dir / "report.json", report_text(result.report));
        write_text(run.dir / "loss.csv", loss_csv(result.report));
        write_text(run.dir / "timing.json", json{{"wall_seconds", result.report.wall_seconds}}.dump(2) + '\n');
        run.report = std::move(result.report);
        std::lock_guard lock(log_mutex);
        out << metrics_line(spec.name(), "seed " + std::to_string(run.seed), run.report.test) << '\n';
      } catch (const std::exception& e) {
        std::lock_guard lock(log_mutex);
        if (!failed.exchange(true)) failure = "seed " + std::to_string(run.seed) + ": " + e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, runs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed) throw TrainingError(failure);

  if (many && runs.size() >= 2) {
    std::vector<RunReport> reports;
    for (const auto& r : runs) reports.push_back(r.report);
    const AggregateRow row[] = {aggregate(reports)};
    write_text(root / "summary.csv", format_csv(row));
    write_text(root / "summary.txt", format_table(row));
    out << format_table(row);
  }
  err << "wrote " << root.string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, const std::string& data,
             const std::string& inductive, std::ostream& out, std::ostream& err) {
  if (data.empty() == inductive.empty()) throw UsageError("eval needs exactly one of --data or --inductive");
  // Validate the generator config before loading anything heavy.
  std::optional<GenerateSettings> fresh_settings;
  if (!inductive.empty()) fresh_settings = generate_settings(resolve_config(generate_schema(), inductive, o.overrides));
  else if (!o.overrides.empty()) throw UsageError("--override applies to the --inductive generator config only");

  LoadedCheckpoint ck = open_checkpoint(checkpoint);
  const std::string name = ck.model.spec().name();
  json report;
  Metrics m;
  std::string mode;
  if (fresh_settings) {
    require_kind(ck.info.kind, fresh_settings->kind, "the inductive generator config");
    err << "generating fresh " << to_string(fresh_settings->kind) << " graph with seed " << fresh_settings->gen.seed
        << '\n';
    const Multigraph fresh = gen::normalize_dataset(gen::generate_financial(fresh_settings->gen));
    const RunReport r = inductive_eval(ck.model, fresh, ck.info.train.init_seed);
    mode = "inductive";
    m = r.test;
    report = {{"mode", mode}, {"model", name}, {"seed", r.seed}, {"dataset_seed", fresh_settings->gen.seed},
              {"test", m}};
  } else {
    const Multigraph g = load_normalized(data);
    require_kind(ck.info.kind, g.kind(), "dataset " + data);
    const GraphContext ctx = make_context(g);
    const SplitMask splits = make_splits(g.num_vertices(), ck.info.ratios, ck.info.split_seed);
    mode = "transductive";
    m = evaluate(ck.model, ctx, g.labels(), splits.test);
    report = {{"mode", mode}, {"model", name}, {"seed", ck.info.train.init_seed}, {"split_seed", ck.info.split_seed},
              {"test", m}};
  }
  const fs::path path = o.out.empty() ? fs::path(checkpoint).parent_path() / ("eval-" + mode + ".json") : fs::path(o.out);
  prepare_file(path, o.force);
  write_text(path, report.dump(2) + '\n');
  out << metrics_line(name, mode, m) << '\n';
  err << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_export(const CommonOptions& o, const std::string& checkpoint, const std::string& data, std::ostream& out,
               std::ostream& err) {
  LoadedCheckpoint ck = open_checkpoint(checkpoint);
  if (!ck.model.spec().uses_gamma()) {
    throw std::runtime_error(ck.model.spec().name() + " has no edge encoder, so there are no embeddings to export");
  }
  const Multigraph g = load_normalized(data);
  require_kind(ck.info.kind, g.kind(), "dataset " + data);
  const GraphContext ctx = make_context(g);
  const ad::Tensor w = ck.model.edge_embeddings(ctx);
  const std::size_t width = w.dim(1);

  std::string text = "edge_id,src,dst,trans_type,fraud_type";
  for (std::size_t k = 1; k <= width; ++k) text += ",w_" + std::to_string(k);
  text += '\n';
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& edge = g.edge(e);
    const auto& meta = g.metadata(e);
    text += std::to_string(e) + ',' + std::to_string(edge.src) + ',' + std::to_string(edge.dst) + ',' +
            std::to_string(meta.trans_type) + ',' + std::string(to_string(meta.fraud));
    for (std::size_t k = 0; k < width; ++k) {
      text += ',';
      append_double(text, w[e * width + k]);
    }
    text += '\n';
  }
  const fs::path path = o.out.empty() ? fs::path(checkpoint).parent_path() / "embeddings.csv" : fs::path(o.out);
  prepare_file(path, o.force);
  write_text(path, text);
  out << "exported " << g.num_edges() << " edge embeddings of width " << width << '\n';
  err << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_inspect(const std::string& checkpoint, const std::string& data, std::ostream& out) {
  if (data.empty() == checkpoint.empty()) throw UsageError("inspect needs exactly one of --data or --checkpoint");
  if (!data.empty()) {
    const Multigraph g = load_dataset(data);
    out << summary_table(g);
    return kExitOk;
  }
  const LoadedCheckpoint ck = open_checkpoint(checkpoint);
  json summary = {{"model", ck.model.spec().name()},
                  {"dataset_kind", to_string(ck.info.kind)},
                  {"num_parameters", ck.model.num_parameters()},
                  {"optimizer_steps", ck.optimizer.steps()},
                  {"train", ck.info.train},
                  {"split_seed", ck.info.split_seed}};
  json params = json::array();
  for (const auto& p : ck.model.parameters().all()) params.push_back({p.name, p.value.shape()});
  summary["parameters"] = params;
  out << summary.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

const Schema& generate_schema() {
  static const Schema schema{
      {"schema_version", FieldType::UInt, false, kConfigSchemaVersion, "config format version"},
      {"kind", FieldType::String, false, "financial-1hop", "financial-1hop or financial-2hop"},
      {"n_vertices_init", FieldType::UInt, false, 50000, "vertices before pruning"},
      {"n_edges_target", FieldType::UInt, false, 125000, "distinct directed pairs to sample"},
      {"fraud_ratio", FieldType::Number, false, 0.1, "probability of class F"},
      {"seed", FieldType::UInt, false, 0, "generator seed"},
      {"mutation_prob", FieldType::Number, false, 1.0 / 3.0, "chance a fraud sequence is mutated"},
  };
  return schema;
}

const Schema& train_schema() {
  static const Schema schema{
      {"schema_version", FieldType::UInt, false, kConfigSchemaVersion, "config format version"},
      {"model", FieldType::String, false, "L4-GCN+", "GCN, DVE, L<k>-GCN or L<k>-GCN+"},
      {"epochs", FieldType::UInt, false, 2000, "full-batch steps"},
      {"learning_rate", FieldType::Number, true, nullptr, "null: 5e-4 financial, 1.5e-4 transport"},
      {"weight_decay", FieldType::Number, false, 5e-4, "L2 coefficient"},
      {"init_seed", FieldType::UInt, false, 0, "weight initialisation and dropout seed"},
      {"val_every", FieldType::UInt, false, 10, "validation loss interval in epochs"},
      {"split_seed", FieldType::UInt, false, 0, "seed of the train/val/test permutation"},
      {"train_ratio", FieldType::Number, false, 0.05, "share of vertices used for training"},
      {"val_ratio", FieldType::Number, false, 0.05, "share of vertices used for validation"},
      {"test_ratio", FieldType::Number, false, 0.90, "share of vertices used for testing"},
      {"hidden", FieldType::UInt, true, nullptr, "null: 20 financial, 6 transport"},
      {"kernels", FieldType::UInt, false, 20, "convolution kernels of the edge encoder"},
      {"layer_dropout", FieldType::Number, false, 0.5, "dropout between the graph layers"},
      {"gamma_dropout", FieldType::Number, true, nullptr, "null: 0.2 financial, 0 transport"},
      {"direction", FieldType::String, false, "target-canonical", "target-canonical or source-canonical"},
      {"shared_self_weight", FieldType::Bool, false, true, "one self-loop relation vector for both layers"},
      {"dve_merge", FieldType::String, false, "concat", "concat or sum of incident-edge means"},
      {"bucket_boundaries", FieldType::UIntList, false, json(kDefaultBucketBoundaries), "sequence bucket capacities"},
  };
  return schema;
}

json defaults(const Schema& schema) {
  json j = json::object();
  for (const auto& f : schema) j[f.name] = f.fallback;
  return j;
}

json merge_config(const Schema& schema, const json& user) {
  if (!user.is_object()) throw UsageError("config must be a JSON object");
  if (!user.contains("schema_version")) throw UsageError("config is missing schema_version");
  json merged = defaults(schema);
  for (const auto& [key, value] : user.items()) {
    const Field& f = find_field(schema, key);
    check_value(f, value);
    merged[key] = value;
  }
  return merged;
}

void apply_override(const Schema& schema, json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  const Field& f = find_field(schema, key);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    if (f.type == FieldType::UIntList) {
      value = json::array();
      std::string_view rest = text;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        value.push_back(parse_uint(rest.substr(0, comma)));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else {
      value = text;
    }
  }
  if (f.type == FieldType::String && !value.is_string() && !value.is_null()) value = text;
  check_value(f, value);
  config[key] = value;
}

json resolve_config(const Schema& schema, const fs::path& file, const std::vector<std::string>& overrides) {
  json config = defaults(schema);
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot read config " + file.string());
    const json user = json::parse(in, nullptr, false);
    if (user.is_discarded()) throw UsageError("config " + file.string() + " is not valid JSON");
    config = merge_config(schema, user);
  }
  for (const auto& o : overrides) apply_override(schema, config, o);
  return config;
}

GenerateSettings generate_settings(const json& config) {
  GenerateSettings s;
  const auto kind = config.at("kind").get<std::string>();
  s.kind = as_usage([&] { return parse_dataset_kind(kind); });
  if (!is_financial(s.kind)) throw UsageError("generate supports financial-1hop and financial-2hop, got " + kind);
  s.gen.n_vertices_init = config.at("n_vertices_init").get<std::size_t>();
  s.gen.n_edges_target = config.at("n_edges_target").get<std::size_t>();
  s.gen.fraud_ratio = config.at("fraud_ratio").get<double>();
  s.gen.seed = config.at("seed").get<std::uint64_t>();
  s.gen.mutation_prob = config.at("mutation_prob").get<double>();
  s.gen.two_hop = s.kind == DatasetKind::Financial2Hop;
  as_usage([&] {
    s.gen.validate();
    return 0;
  });
  return s;
}

TrainSettings train_settings(const json& config) {
  TrainSettings s;
  s.model = config.at("model").get<std::string>();
  s.train.epochs = config.at("epochs").get<std::size_t>();
  s.learning_rate_set = !config.at("learning_rate").is_null();
  if (s.learning_rate_set) s.train.learning_rate = config.at("learning_rate").get<double>();
  s.train.weight_decay = config.at("weight_decay").get<double>();
  s.train.init_seed = config.at("init_seed").get<std::uint64_t>();
  s.train.val_every = config.at("val_every").get<std::size_t>();
  s.split_seed = config.at("split_seed").get<std::uint64_t>();
  s.ratios = {config.at("train_ratio").get<double>(), config.at("val_ratio").get<double>(),
              config.at("test_ratio").get<double>()};
  s.bucket_boundaries = config.at("bucket_boundaries").get<std::vector<std::size_t>>();
  for (const char* key : {"hidden", "kernels", "layer_dropout", "gamma_dropout", "direction", "shared_self_weight",
                          "dve_merge"}) {
    s.model_options[key] = config.at(key);
  }
  as_usage([&] {
    s.train.validate();
    // Parse every option once so that bad values fail before any data is read.
    s.spec_for(DatasetKind::Financial1Hop);
    return 0;
  });
  return s;
}

ModelSpec TrainSettings::spec_for(DatasetKind kind) const {
  ModelSpec spec = ModelSpec::from_name(model, kind);
  const json& o = model_options;
  if (!o.at("hidden").is_null()) spec.hidden = o.at("hidden").get<std::size_t>();
  if (!o.at("gamma_dropout").is_null()) spec.gamma.dropout = o.at("gamma_dropout").get<double>();
  if (is_financial(kind)) spec.gamma.kernels = o.at("kernels").get<std::size_t>();
  spec.layer_dropout = o.at("layer_dropout").get<double>();
  spec.direction = parse_direction(o.at("direction").get<std::string>());
  spec.shared_self_weight = o.at("shared_self_weight").get<bool>();
  spec.dve_merge = parse_dve_merge(o.at("dve_merge").get<std::string>());
  spec.validate();
  return spec;
}

TrainConfig TrainSettings::train_for(DatasetKind kind) const {
  TrainConfig cfg = train;
  if (!learning_rate_set) cfg.learning_rate = TrainConfig::for_kind(kind).learning_rate;
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = parse_uint(text.substr(0, dots)), hi = parse_uint(text.substr(dots + 2));
    if (hi < lo) throw UsageError("empty seed range '" + std::string(text) + "'");
    if (hi - lo >= 100000) throw UsageError("seed range '" + std::string(text) + "' is too long");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    std::string_view rest = text;
    while (true) {
      const auto comma = rest.find(',');
      seeds.push_back(parse_uint(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw UsageError("seed list '" + std::string(text) + "' repeats a seed");
  }
  return seeds;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-graph convolutional networks on multigraphs"};
  app.name("lgcn");
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, eval_opts, export_opts;
  std::string data, checkpoint, inductive, seeds;
  std::size_t jobs = 1, progress_every = 100;

  auto* gen_cmd = app.add_subcommand("generate", "Generate a synthetic transaction network");
  add_common(gen_cmd, gen_opts, true);

  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset directory");
  add_common(train_cmd, train_opts, true);
  train_cmd->add_option("-d,--data", data, "Dataset directory")->required();
  train_cmd->add_option("--seeds", seeds, "Initialisation seeds: N, A..B or A,B,C");
  train_cmd->add_option("-j,--jobs", jobs, "Parallel seed runs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--progress-every", progress_every, "Epochs between progress lines (0: silent)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval_cmd, eval_opts, false);
  eval_cmd->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("-d,--data", data, "Dataset directory (transductive)");
  eval_cmd->add_option("-i,--inductive", inductive, "Generator config for a fresh graph")->check(CLI::ExistingFile);
  eval_cmd->add_option("-s,--override", eval_opts.overrides, "Generator config assignment key=value");

  auto* export_cmd = app.add_subcommand("export-embeddings", "Write first-layer edge embeddings as CSV");
  add_common(export_cmd, export_opts, false);
  export_cmd->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  export_cmd->add_option("-d,--data", data, "Dataset directory")->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise a dataset or checkpoint");
  inspect_cmd->add_option("-d,--data", data, "Dataset directory");
  inspect_cmd->add_option("-k,--checkpoint", checkpoint, "Checkpoint file");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_generate(gen_opts, out, err);
    if (train_cmd->parsed()) return cmd_train(train_opts, data, seeds, jobs, progress_every, out, err);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, checkpoint, data, inductive, out, err);
    if (export_cmd->parsed()) return cmd_export(export_opts, checkpoint, data, out, err);
    return cmd_inspect(checkpoint, data, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace lgcn::cli
