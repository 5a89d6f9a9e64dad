#include "lgcn/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string_view>
#include <vector>

namespace lgcn {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Line-oriented CSV reader over an in-memory buffer; no quoting.
class CsvReader {
 public:
  CsvReader(const fs::path& path, std::size_t expected_columns)
      : name_(path.filename().string()), text_(read_file(path)), columns_(expected_columns) {
    std::string_view header;
    if (!next_line(header)) fail("missing header");
    split(header);
    if (fields_.size() != columns_) fail("header has " + std::to_string(fields_.size()) +
                                         " columns, expected " + std::to_string(columns_));
  }

  bool next() {
    std::string_view line;
    while (next_line(line)) {
      if (line.empty()) continue;
      split(line);
      if (fields_.size() != columns_) {
        fail("has " + std::to_string(fields_.size()) + " fields, expected " +
             std::to_string(columns_));
      }
      return true;
    }
    return false;
  }

  std::string_view field(std::size_t i) const { return fields_[i]; }

  template <class T>
  T number(std::size_t i) const {
    T value{};
    const auto f = fields_[i];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      fail("field " + std::to_string(i + 1) + " '" + std::string(f) + "' is not a number");
    }
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(name_ + " line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  bool next_line(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    auto end = text_.find('\n', pos_);
    if (end == std::string::npos) end = text_.size();
    line = std::string_view(text_).substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  void split(std::string_view line) {
    fields_.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields_.push_back(line.substr(start));
        break;
      }
      fields_.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  }

  std::string name_;
  std::string text_;
  std::size_t columns_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::string_view> fields_;
};

std::string join_header(std::initializer_list<std::string_view> head, std::string_view prefix,
                        std::size_t count, std::initializer_list<std::string_view> tail) {
  std::string out;
  auto add = [&](std::string_view s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  for (auto h : head) add(h);
  for (std::size_t i = 1; i <= count; ++i) add(std::string(prefix) + std::to_string(i));
  for (auto t : tail) add(t);
  out += '\n';
  return out;
}

}  // namespace

void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  out.append(buf, ptr);
}

std::string format_double(double value) {
  std::string s;
  append_double(s, value);
  return s;
}

void save_dataset(const Multigraph& g, const fs::path& dir) {
  if (g.info().normalized) {
    throw std::invalid_argument("save_dataset stores raw values; got a normalized graph");
  }
  fs::create_directories(dir);
  const auto& vt = g.vertices();
  const std::size_t n = g.num_vertices();
  const std::size_t nf = g.num_features();

  std::vector<std::size_t> class_counts(g.num_classes(), 0);
  for (int y : vt.labels) ++class_counts.at(static_cast<std::size_t>(y));

  json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["kind"] = std::string(to_string(g.kind()));
  meta["num_vertices"] = n;
  meta["num_edges"] = g.num_edges();
  meta["num_features"] = nf;
  meta["attr_dim"] = g.sequences().attr_dim();
  meta["total_sequence_length"] = g.sequences().total_length();
  meta["class_counts"] = class_counts;
  meta["has_hidden_class"] = !vt.hidden_class.empty();
  meta["has_remap"] = !vt.original_ids.empty();
  const auto& info = g.info();
  meta["seed"] = info.seed;
  meta["fraud_ratio"] = info.fraud_ratio;
  meta["n_vertices_init"] = info.n_vertices_init;
  meta["n_edges_target"] = info.n_edges_target;
  meta["mule_count"] = info.mule_count;
  meta["dt_clamp_count"] = info.dt_clamp_count;
  meta["normalization"] = {{"features", "min-max per column"},
                           {"time_log_scale", info.time_log_scale},
                           {"amount_log_scale", info.amount_log_scale}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string text = join_header({"id"}, "f", nf, {"label", "hidden_class"});
  for (std::size_t v = 0; v < n; ++v) {
    text += std::to_string(v);
    for (double x : vt.row(v)) {
      text += ',';
      append_double(text, x);
    }
    text += ',';
    text += std::to_string(vt.labels[v]);
    text += ',';
    text += vt.hidden_class.empty() ? "0" : std::to_string(vt.hidden_class[v]);
    text += '\n';
  }
  write_file(dir / "nodes.csv", text);

  text = "id,original_id\n";
  for (std::size_t v = 0; v < vt.original_ids.size(); ++v) {
    text += std::to_string(v) + ',' + std::to_string(vt.original_ids[v]) + '\n';
  }
  write_file(dir / "remap.csv", text);

  text = "edge_id,src,dst,trans_type,fraud_type\n";
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& edge = g.edge(e);
    const auto& m = g.metadata(e);
    text += std::to_string(e) + ',' + std::to_string(edge.src) + ',' + std::to_string(edge.dst) +
            ',' + std::to_string(m.trans_type) + ',' + std::string(to_string(m.fraud)) + '\n';
  }
  write_file(dir / "edges.csv", text);

  const auto& seqs = g.sequences();
  if (is_financial(g.kind())) {
    text = "edge_id,seq_pos,attr1,attr2\n";
    text.reserve(seqs.total_length() * 48);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const auto s = seqs.sequence(e);
      const std::string prefix = std::to_string(e) + ',';
      for (std::size_t k = 0; k < seqs.length(e); ++k) {
        text += prefix;
        text += std::to_string(k);
        text += ',';
        append_double(text, s[2 * k]);
        text += ',';
        append_double(text, s[2 * k + 1]);
        text += '\n';
      }
    }
    write_file(dir / "transactions.csv", text);
  } else {
    text = join_header({"edge_id"}, "p", seqs.attr_dim(), {});
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      text += std::to_string(e);
      for (double x : seqs.sequence(e)) {
        text += ',';
        append_double(text, x);
      }
      text += '\n';
    }
    write_file(dir / "profiles.csv", text);
  }
}

Multigraph load_dataset(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_file(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw ParseError("meta.json: " + std::string(e.what()));
  }
  const int version = meta.value("format_version", -1);
  if (version != kDatasetFormatVersion) {
    throw ParseError("meta.json: format_version " + std::to_string(version) +
                     " is not supported (expected " + std::to_string(kDatasetFormatVersion) + ")");
  }
  DatasetKind kind;
  std::size_t n, n_edges, nf, attr_dim;
  DatasetInfo info;
  bool has_hidden, has_remap;
  try {
    kind = parse_dataset_kind(meta.at("kind").get<std::string>());
    n = meta.at("num_vertices").get<std::size_t>();
    n_edges = meta.at("num_edges").get<std::size_t>();
    nf = meta.at("num_features").get<std::size_t>();
    attr_dim = meta.at("attr_dim").get<std::size_t>();
    has_hidden = meta.at("has_hidden_class").get<bool>();
    has_remap = meta.at("has_remap").get<bool>();
    info.seed = meta.at("seed").get<std::uint64_t>();
    info.fraud_ratio = meta.at("fraud_ratio").get<double>();
    info.n_vertices_init = meta.at("n_vertices_init").get<std::size_t>();
    info.n_edges_target = meta.at("n_edges_target").get<std::size_t>();
    info.mule_count = meta.at("mule_count").get<std::size_t>();
    info.dt_clamp_count = meta.at("dt_clamp_count").get<std::size_t>();
    info.time_log_scale = meta.at("normalization").at("time_log_scale").get<double>();
    info.amount_log_scale = meta.at("normalization").at("amount_log_scale").get<double>();
  } catch (const std::exception& e) {
    throw ParseError("meta.json: " + std::string(e.what()));
  }

  VertexTable vt;
  vt.num_features = nf;
  vt.features.reserve(n * nf);
  vt.labels.reserve(n);
  std::vector<std::uint8_t> hidden;
  {
    CsvReader csv(dir / "nodes.csv", nf + 3);
    std::size_t expect = 0;
    while (csv.next()) {
      if (csv.number<std::size_t>(0) != expect) csv.fail("vertex ids must be dense and ordered");
      for (std::size_t f = 0; f < nf; ++f) vt.features.push_back(csv.number<double>(f + 1));
      vt.labels.push_back(csv.number<int>(nf + 1));
      hidden.push_back(csv.number<std::uint8_t>(nf + 2));
      ++expect;
    }
    if (expect != n) csv.fail("found " + std::to_string(expect) + " vertices, meta.json says " + std::to_string(n));
  }
  if (has_hidden) vt.hidden_class = std::move(hidden);
  if (has_remap) {
    CsvReader csv(dir / "remap.csv", 2);
    while (csv.next()) {
      if (csv.number<std::size_t>(0) != vt.original_ids.size()) csv.fail("remap ids must be dense and ordered");
      vt.original_ids.push_back(csv.number<std::int64_t>(1));
    }
  }

  std::vector<MultiEdge> edges;
  std::vector<EdgeMeta> metadata;
  edges.reserve(n_edges);
  metadata.reserve(n_edges);
  {
    CsvReader csv(dir / "edges.csv", 5);
    while (csv.next()) {
      if (csv.number<std::size_t>(0) != edges.size()) csv.fail("edge ids must be dense and ordered");
      const auto src = csv.number<std::uint32_t>(1);
      const auto dst = csv.number<std::uint32_t>(2);
      if (src >= n || dst >= n) csv.fail("vertex id out of range");
      edges.push_back({src, dst});
      EdgeMeta m;
      m.trans_type = csv.number<int>(3);
      try {
        m.fraud = parse_fraud_type(csv.field(4));
      } catch (const std::invalid_argument& e) {
        csv.fail(e.what());
      }
      metadata.push_back(m);
    }
    if (edges.size() != n_edges) csv.fail("found " + std::to_string(edges.size()) + " edges, meta.json says " + std::to_string(n_edges));
  }

  SequenceStore seqs(attr_dim);
  if (is_financial(kind)) {
    if (attr_dim != 2) throw ParseError("meta.json: financial datasets have attr_dim 2");
    CsvReader csv(dir / "transactions.csv", 4);
    std::vector<double> current;
    std::size_t current_edge = 0;
    auto flush_until = [&](std::size_t edge) {
      while (current_edge < edge) {
        seqs.append(current);
        current.clear();
        ++current_edge;
      }
    };
    while (csv.next()) {
      const auto e = csv.number<std::size_t>(0);
      if (e >= n_edges) csv.fail("transaction references unknown edge id " + std::to_string(e));
      if (e < current_edge) csv.fail("transactions must be grouped by ascending edge id");
      flush_until(e);
      if (csv.number<std::size_t>(1) != current.size() / 2) csv.fail("seq_pos out of order");
      current.push_back(csv.number<double>(2));
      current.push_back(csv.number<double>(3));
    }
    flush_until(n_edges);
  } else {
    CsvReader csv(dir / "profiles.csv", attr_dim + 1);
    std::vector<double> row(attr_dim);
    std::size_t count = 0;
    while (csv.next()) {
      const auto e = csv.number<std::size_t>(0);
      if (e >= n_edges) csv.fail("profile references unknown edge id " + std::to_string(e));
      if (e != count) csv.fail("profiles must be ordered by edge id");
      for (std::size_t i = 0; i < attr_dim; ++i) row[i] = csv.number<double>(i + 1);
      seqs.append(row);
      ++count;
    }
    if (count != n_edges) csv.fail("found " + std::to_string(count) + " profiles, expected " + std::to_string(n_edges));
  }

  return Multigraph(kind, std::move(vt), std::move(edges), std::move(seqs), std::move(metadata),
                    info);
}

}  // namespace lgcn
