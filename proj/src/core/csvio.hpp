#pragma once

#include <string>
#include <vector>

#include "core/fields.hpp"

namespace hydroschro {

// Field CSV schema: header `t,x,value`, row-major by time then space, 17
// significant digits. Cell fields use cell centers, face fields face
// positions. Multi-variable files add a `variable` column.
void write_csv(const std::string& path, const CellPath& p);
void write_csv(const std::string& path, const FacePath& p);
void write_csv(const std::string& path, const CellField& c);

struct NamedCellPath {
  std::string name;
  const CellPath* path;
};
void write_csv_multi(const std::string& path, const std::vector<NamedCellPath>& vars);

// Reads a `t,x,value` file back into a path. The grid geometry (n, L,
// boundary) is inferred from the x column; time nodes must be uniform.
CellPath read_cell_path_csv(const std::string& path);
FacePath read_face_path_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const std::vector<std::vector<double>>& m);

}  // namespace hydroschro
