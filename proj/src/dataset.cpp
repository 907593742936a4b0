#include "graphssl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "graphssl/errors.hpp"
#include "io_util.hpp"

namespace graphssl {

namespace {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::split;
using detail::trim;

constexpr char kBinaryMagic[8] = {'G', 'S', 'S', 'L', 'B', 'I', 'N', '1'};

void check_finite(const Eigen::MatrixXd& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (!std::isfinite(X(i, j))) {
        throw DataError(DataError::Code::NonFinite,
                        "non-finite entry at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
      }
    }
  }
}

// Header: "m=<m>,n=<n>[,labels=1][,l=<l>]". When labels are declared the
// next line holds n comma-separated class tokens. l defaults to n when
// labels are present.
DataSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header) || trim(header).empty()) {
    throw DataError(DataError::Code::EmptyFile, "empty dataset file '" + path + "'");
  }

  Eigen::Index m = -1, n = -1, l = -1;
  bool has_labels = false;
  for (const auto& field : split(trim(header), ',')) {
    const auto kv = split(field, '=');
    if (kv.size() != 2) {
      throw DataError(DataError::Code::Parse,
                      "malformed header field '" + field + "' in " + path);
    }
    const std::string key = trim(kv[0]);
    if (key == "m") m = parse_int(trim(kv[1]), path);
    else if (key == "n") n = parse_int(trim(kv[1]), path);
    else if (key == "labels") has_labels = parse_int(trim(kv[1]), path) != 0;
    else if (key == "l") l = parse_int(trim(kv[1]), path);
    else
      throw DataError(DataError::Code::Parse,
                      "unknown header key '" + key + "' in " + path);
  }
  if (m <= 0 || n <= 0) {
    throw DataError(DataError::Code::Parse,
                    "dataset header must declare positive m and n");
  }

  DataSet ds;
  ds.name = path;
  if (has_labels) {
    std::string label_line;
    if (!std::getline(in, label_line)) {
      throw DataError(DataError::Code::Parse, "missing label line in " + path);
    }
    const auto tokens = split(trim(label_line), ',');
    if (static_cast<Eigen::Index>(tokens.size()) != n) {
      throw DataError(DataError::Code::RaggedRows,
                      "label line has " + std::to_string(tokens.size()) +
                          " entries; expected " + std::to_string(n));
    }
    std::map<std::string, int> ids;
    for (const auto& raw : tokens) {
      const std::string tok = trim(raw);
      auto [it, inserted] = ids.emplace(tok, static_cast<int>(ds.class_names.size()));
      if (inserted) ds.class_names.push_back(tok);
      ds.labels.push_back(it->second);
    }
  }

  ds.X.resize(m, n);
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (row >= m) {
      throw DataError(DataError::Code::RaggedRows,
                      "more than " + std::to_string(m) + " data rows in " + path);
    }
    const auto tokens = split(t, ',');
    if (static_cast<Eigen::Index>(tokens.size()) != n) {
      throw DataError(DataError::Code::RaggedRows,
                      "row " + std::to_string(row) + " has " +
                          std::to_string(tokens.size()) + " entries; expected " +
                          std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      ds.X(row, j) = parse_double(trim(tokens[static_cast<std::size_t>(j)]),
                                  path + " row " + std::to_string(row));
    }
    ++row;
  }
  if (row != m) {
    throw DataError(DataError::Code::RaggedRows,
                    "expected " + std::to_string(m) + " data rows, found " +
                        std::to_string(row));
  }

  check_finite(ds.X);
  ds.labeled_prefix = ds.has_labels() ? (l >= 0 ? l : n) : 0;
  if (ds.labeled_prefix > n) {
    throw DataError(DataError::Code::Parse, "labeled prefix l exceeds n");
  }
  return ds;
}

void save_csv(const DataSet& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  out << "m=" << ds.feature_dim() << ",n=" << ds.sample_count();
  if (ds.has_labels()) out << ",labels=1,l=" << ds.labeled_prefix;
  out << "\n";
  if (ds.has_labels()) {
    for (Eigen::Index j = 0; j < ds.sample_count(); ++j) {
      if (j) out << ",";
      out << ds.class_names[static_cast<std::size_t>(ds.label_of(j))];
    }
    out << "\n";
  }
  for (Eigen::Index i = 0; i < ds.feature_dim(); ++i) {
    for (Eigen::Index j = 0; j < ds.sample_count(); ++j) {
      if (j) out << ",";
      out << format_double(ds.X(i, j));
    }
    out << "\n";
  }
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

// Binary layout: magic, int64 m/n/l/has_labels, int64 labels when present,
// doubles column-major. Class names are not stored; ids become the names.
DataSet load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Code::Io, "cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8)) {
    throw DataError(DataError::Code::EmptyFile, "empty dataset file '" + path + "'");
  }
  if (!std::equal(magic, magic + 8, kBinaryMagic)) {
    throw DataError(DataError::Code::Parse, "bad magic in '" + path + "'");
  }
  std::int64_t m = 0, n = 0, l = 0, has_labels = 0;
  in.read(reinterpret_cast<char*>(&m), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&l), 8);
  in.read(reinterpret_cast<char*>(&has_labels), 8);
  if (!in || m <= 0 || n <= 0 || l < 0 || l > n) {
    throw DataError(DataError::Code::Parse, "bad dimensions in '" + path + "'");
  }

  DataSet ds;
  ds.name = path;
  if (has_labels) {
    std::vector<std::int64_t> raw(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(raw.data()), n * 8);
    int max_id = -1;
    for (auto v : raw) {
      if (v < 0) throw DataError(DataError::Code::Parse, "negative label id");
      ds.labels.push_back(static_cast<int>(v));
      max_id = std::max(max_id, static_cast<int>(v));
    }
    for (int c = 0; c <= max_id; ++c) ds.class_names.push_back(std::to_string(c));
  }
  ds.X.resize(m, n);
  in.read(reinterpret_cast<char*>(ds.X.data()),
          static_cast<std::streamsize>(sizeof(double)) * m * n);
  if (!in) throw DataError(DataError::Code::Parse, "truncated file '" + path + "'");
  check_finite(ds.X);
  ds.labeled_prefix = has_labels ? l : 0;
  return ds;
}

void save_binary(const DataSet& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Code::Io, "cannot write '" + path + "'");
  out.write(kBinaryMagic, 8);
  const std::int64_t m = ds.feature_dim(), n = ds.sample_count();
  const std::int64_t l = ds.labeled_prefix;
  const std::int64_t has_labels = ds.has_labels() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&m), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&l), 8);
  out.write(reinterpret_cast<const char*>(&has_labels), 8);
  if (has_labels) {
    for (int v : ds.labels) {
      const std::int64_t w = v;
      out.write(reinterpret_cast<const char*>(&w), 8);
    }
  }
  out.write(reinterpret_cast<const char*>(ds.X.data()),
            static_cast<std::streamsize>(sizeof(double)) * m * n);
  if (!out) throw DataError(DataError::Code::Io, "write failed for '" + path + "'");
}

}  // namespace

DataSet make_labeled_dataset(Eigen::MatrixXd X, std::vector<int> labels,
                             Eigen::Index labeled_prefix, std::string name) {
  if (!labels.empty() &&
      static_cast<Eigen::Index>(labels.size()) != X.cols()) {
    throw std::invalid_argument("make_labeled_dataset: label count mismatch");
  }
  DataSet ds;
  ds.X = std::move(X);
  ds.labels = std::move(labels);
  ds.labeled_prefix = labeled_prefix;
  ds.name = std::move(name);
  int max_id = -1;
  for (int v : ds.labels) {
    if (v < 0) throw std::invalid_argument("make_labeled_dataset: negative label");
    max_id = std::max(max_id, v);
  }
  for (int c = 0; c <= max_id; ++c) ds.class_names.push_back(std::to_string(c));
  if (ds.labeled_prefix > ds.sample_count() ||
      (ds.labeled_prefix > 0 && !ds.has_labels())) {
    throw std::invalid_argument("make_labeled_dataset: bad labeled prefix");
  }
  return ds;
}

DataSet load_dataset(const std::string& path, DataFormat format) {
  return format == DataFormat::Csv ? load_csv(path) : load_binary(path);
}

void save_dataset(const DataSet& ds, const std::string& path,
                  DataFormat format) {
  if (format == DataFormat::Csv) save_csv(ds, path);
  else save_binary(ds, path);
}

void normalize_max(DataSet& ds) {
  if (ds.X.size() == 0) {
    throw DataError(DataError::Code::Degenerate, "cannot normalize empty matrix");
  }
  const double mx = ds.X.maxCoeff();
  if (!(mx > 0.0)) {
    throw DataError(DataError::Code::Degenerate,
                    "cannot normalize: maximum entry is not positive");
  }
  ds.X /= mx;
}

}  // namespace graphssl
