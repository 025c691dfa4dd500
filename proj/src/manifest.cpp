#include "covis/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "covis/error.hpp"
#include "covis/log.hpp"

namespace covis {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line_no, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest line " + std::to_string(line_no) +
                                                 ": bad number '" + s + "' in " + column);
  }
  return v;
}

}  // namespace

std::vector<std::string> manifest_columns() {
  std::vector<std::string> cols{"pair_id", "image1", "image2"};
  for (const char* m : {"K1", "K2", "R"}) {
    for (int i = 0; i < 9; ++i) cols.push_back(std::string(m) + "_" + std::to_string(i));
  }
  for (int i = 0; i < 3; ++i) cols.push_back("t_" + std::to_string(i));
  return cols;
}

std::vector<ManifestRow> parse_manifest(const std::string& text,
                                        const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split(line);
  }
  if (header.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest is empty");

  const std::vector<std::string> expected = manifest_columns();
  if (header.size() < expected.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "manifest header has " + std::to_string(header.size()) + " columns, expected " +
                    std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "manifest column " + std::to_string(i) + " is '" + header[i] + "', expected '" +
                      expected[i] + "'");
    }
  }
  if (header.size() > expected.size()) {
    std::string extra;
    for (std::size_t i = expected.size(); i < header.size(); ++i) {
      extra += (extra.empty() ? "" : ", ") + header[i];
    }
    log::warn("manifest: ignoring extra columns: {}", extra);
  }

  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "manifest line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    ManifestRow row;
    row.pair_id = cells[0];
    if (row.pair_id.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "manifest line " + std::to_string(line_no) + ": empty pair_id");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    row.image1 = resolve(cells[1]);
    row.image2 = resolve(cells[2]);
    std::size_t c = 3;
    for (Eigen::Matrix3d* m : {&row.K1, &row.K2, &row.R}) {
      for (int i = 0; i < 9; ++i, ++c) (*m)(i / 3, i % 3) = to_double(cells[c], line_no, header[c]);
    }
    for (int i = 0; i < 3; ++i, ++c) row.t(i) = to_double(cells[c], line_no, header[c]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest has no pairs");
  return rows;
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

std::string format_manifest(const std::vector<ManifestRow>& rows,
                            const std::filesystem::path& base_dir) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto cols = manifest_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  auto rel = [&](const std::filesystem::path& p) {
    if (base_dir.empty()) return p.generic_string();
    std::error_code ec;
    auto r = std::filesystem::relative(p, base_dir, ec);
    return ec || r.empty() ? p.generic_string() : r.generic_string();
  };
  for (const ManifestRow& row : rows) {
    out << row.pair_id << ',' << rel(row.image1) << ',' << rel(row.image2);
    for (const Eigen::Matrix3d* m : {&row.K1, &row.K2, &row.R}) {
      for (int i = 0; i < 9; ++i) out << ',' << (*m)(i / 3, i % 3);
    }
    for (int i = 0; i < 3; ++i) out << ',' << row.t(i);
    out << '\n';
  }
  return out.str();
}

void save_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest '" + path.string() + "'");
  out << format_manifest(rows, path.parent_path());
}

}  // namespace covis
