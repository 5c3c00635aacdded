#include <cstdio>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "mixbec/grid.hpp"

namespace mixbec {

namespace {
constexpr const char* kFieldMagic = "mixbec-field 1";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_field(std::ostream& out, const Field& f) {
  out << kFieldMagic << '\n'
      << "dim " << f.grid.dim() << '\n'
      << "M " << f.grid.points() << '\n'
      << "L " << format_double(f.grid.length()) << '\n'
      << "end\n";
  detail::write_complex_le(out, f.values);
}

Field read_field(std::istream& in) {
  int dim = 0;
  int points = 0;
  double length = 0.0;
  detail::read_text_header(in, kFieldMagic, [&](const std::string& key, const std::string& value) {
    if (key == "dim") dim = std::stoi(value);
    else if (key == "M") points = std::stoi(value);
    else if (key == "L") length = std::stod(value);
    else throw std::runtime_error("field header: unknown key '" + key + "'");
  });
  Grid grid = make_grid(dim, points, length);
  auto values = detail::read_complex_le(in, grid.size());
  return Field(std::move(grid), std::move(values));
}

void save_field(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_field(out, f);
}

Field load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return read_field(in);
}

}  // namespace mixbec
