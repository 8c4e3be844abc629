#pragma once

// File formats: data CSV (group,atom_1,...), decomposition CSV
// (atom_id,subset_id), number formatting and content digests.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "relaxmt/grouping.hpp"
#include "relaxmt/pipeline.hpp"

namespace relaxmt {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
/// "fnv1a64:<hex>" of the file's bytes.
std::string file_digest(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// %.10g, with "inf"/"-inf"/"nan" spelled out.
std::string format_number(double x);

std::vector<std::string> split_csv_line(std::string_view line);

/// Header `group,<atom ids...>`; each row's group is X or Y.
DataMatrix parse_data_csv(std::istream& in, const std::string& source = "<data>");
DataMatrix read_data_csv(const std::string& path);
void write_data_csv(std::ostream& out, const DataMatrix& data);

struct LabeledDecomposition {
  Decomposition decomposition;
  std::vector<std::string> subset_labels;  // index -> original subset id
};

/// Header `atom_id,subset_id`. Atoms are matched against `atom_ids`; atoms
/// missing from either side are listed in the Error(Schema) message.
LabeledDecomposition parse_decomposition_csv(std::istream& in,
                                             const std::vector<std::string>& atom_ids,
                                             const std::string& source = "<decomposition>");
LabeledDecomposition read_decomposition_csv(const std::string& path,
                                            const std::vector<std::string>& atom_ids);
void write_decomposition_csv(std::ostream& out, const std::vector<std::string>& atom_ids,
                             const LabeledDecomposition& d);

}  // namespace relaxmt
