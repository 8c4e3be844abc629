#include "relaxmt/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "relaxmt/error.hpp"

namespace relaxmt {

namespace {

constexpr std::size_t kListedNames = 20;

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string join_limited(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size() && i < kListedNames; ++i)
    out += (i ? ", " : "") + names[i];
  if (names.size() > kListedNames)
    out += ", ... (" + std::to_string(names.size() - kListedNames) + " more)";
  return out;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path + "'");
  out << contents;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for '" + path + "'");
}

std::string file_digest(const std::string& path) { return "fnv1a64:" + hex64(fnv1a64(read_file(path))); }

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

DataMatrix parse_data_csv(std::istream& in, const std::string& source) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Schema,
          source + ": empty file (expected header group,atom_1,...)");
  auto header = split_csv_line(strip_cr(line));
  require(header.size() >= 2 && header[0] == "group", ErrorCode::Schema,
          where(source, 1) + "header must start with 'group' followed by atom ids");
  DataMatrix data;
  data.atom_ids.assign(header.begin() + 1, header.end());
  std::set<std::string> unique(data.atom_ids.begin(), data.atom_ids.end());
  require(unique.size() == data.atom_ids.size(), ErrorCode::Schema,
          where(source, 1) + "duplicate atom ids in header");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    require(fields.size() == header.size(), ErrorCode::Schema,
            where(source, lineno) + "expected " + std::to_string(header.size()) +
                " fields, found " + std::to_string(fields.size()));
    std::vector<double> row(data.atoms());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& f = fields[j + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[j]);
      require(ec == std::errc() && ptr == f.data() + f.size() && std::isfinite(row[j]),
              ErrorCode::Parse,
              where(source, lineno) + "column '" + header[j + 1] + "': '" + f +
                  "' is not a finite number");
    }
    if (fields[0] == "X")
      data.group_x.push_back(std::move(row));
    else if (fields[0] == "Y")
      data.group_y.push_back(std::move(row));
    else
      fail(ErrorCode::Schema,
           where(source, lineno) + "group must be X or Y, found '" + fields[0] + "'");
  }
  require(!data.group_x.empty() && !data.group_y.empty(), ErrorCode::Schema,
          source + ": both groups X and Y need at least one row");
  return data;
}

DataMatrix read_data_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open data file '" + path + "'");
  return parse_data_csv(in, path);
}

void write_data_csv(std::ostream& out, const DataMatrix& data) {
  out << "group";
  for (const auto& id : data.atom_ids) out << ',' << id;
  out << '\n';
  auto rows = [&](const std::vector<std::vector<double>>& g, const char* label) {
    for (const auto& row : g) {
      out << label;
      for (double x : row) out << ',' << format_number(x);
      out << '\n';
    }
  };
  rows(data.group_x, "X");
  rows(data.group_y, "Y");
}

LabeledDecomposition parse_decomposition_csv(std::istream& in,
                                             const std::vector<std::string>& atom_ids,
                                             const std::string& source) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Schema,
          source + ": empty file (expected header atom_id,subset_id)");
  const auto header = split_csv_line(strip_cr(line));
  require(header.size() == 2 && header[0] == "atom_id" && header[1] == "subset_id",
          ErrorCode::Schema, where(source, 1) + "header must be 'atom_id,subset_id'");

  std::unordered_map<std::string, std::size_t> atom_index;
  for (std::size_t j = 0; j < atom_ids.size(); ++j) atom_index.emplace(atom_ids[j], j);

  LabeledDecomposition out;
  std::map<std::string, std::size_t> subset_index;
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> assignment(atom_ids.size(), kUnset);
  std::vector<std::string> unknown;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    require(fields.size() == 2, ErrorCode::Schema,
            where(source, lineno) + "expected 2 fields, found " + std::to_string(fields.size()));
    auto it = atom_index.find(fields[0]);
    if (it == atom_index.end()) {
      unknown.push_back(fields[0]);
      continue;
    }
    require(assignment[it->second] == kUnset, ErrorCode::Schema,
            where(source, lineno) + "atom '" + fields[0] + "' assigned twice");
    auto [sit, inserted] = subset_index.try_emplace(fields[1], out.subset_labels.size());
    if (inserted) out.subset_labels.push_back(fields[1]);
    assignment[it->second] = sit->second;
  }
  std::vector<std::string> missing;
  for (std::size_t j = 0; j < atom_ids.size(); ++j)
    if (assignment[j] == kUnset) missing.push_back(atom_ids[j]);
  if (!unknown.empty() || !missing.empty()) {
    std::string msg = source + ": decomposition and data disagree";
    if (!missing.empty())
      msg += "; atoms in data but not in decomposition (" + std::to_string(missing.size()) +
             "): " + join_limited(missing);
    if (!unknown.empty())
      msg += "; atoms in decomposition but not in data (" + std::to_string(unknown.size()) +
             "): " + join_limited(unknown);
    fail(ErrorCode::Schema, msg);
  }
  out.decomposition = Decomposition::from_assignment(assignment);
  return out;
}

LabeledDecomposition read_decomposition_csv(const std::string& path,
                                            const std::vector<std::string>& atom_ids) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open decomposition file '" + path + "'");
  return parse_decomposition_csv(in, atom_ids, path);
}

void write_decomposition_csv(std::ostream& out, const std::vector<std::string>& atom_ids,
                             const LabeledDecomposition& d) {
  out << "atom_id,subset_id\n";
  for (std::size_t j = 0; j < atom_ids.size(); ++j)
    out << atom_ids[j] << ',' << d.subset_labels[d.decomposition.subset_of(j)] << '\n';
}

}  // namespace relaxmt
