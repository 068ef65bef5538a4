#include "mfg_lab/field_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mfg {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void write_field_csv(std::ostream& os, const ScalarField& field, const std::string& name) {
  const GridGeometry& g = field.geometry();
  json header;
  header["dim"] = g.dim;
  header["shape"] = json::array();
  header["spacing"] = json::array();
  header["origin"] = json::array();
  for (int a = 0; a < g.dim; ++a) {
    header["shape"].push_back(g.shape[a]);
    header["spacing"].push_back(g.spacing[a]);
    header["origin"].push_back(g.origin[a]);
  }
  header["name"] = name;
  os << header.dump() << '\n';
  const Index rows = g.shape[0], cols = g.dim == 2 ? g.shape[1] : 1;
  std::string line;
  for (Index i = 0; i < rows; ++i) {
    line.clear();
    for (Index j = 0; j < cols; ++j) {
      if (j) line += ',';
      line += format_double(field[g.flat(i, j)]);
    }
    line += '\n';
    os << line;
  }
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field, const std::string& name) {
  std::ostringstream os;
  write_field_csv(os, field, name);
  write_text_file(path, os.str());
}

ScalarField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("field file is empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw DomainError(std::string("field header is not JSON: ") + e.what());
  }
  GridGeometry g;
  try {
    g.dim = header.at("dim").get<int>();
    if (g.dim != 1 && g.dim != 2) throw DomainError("field header dim must be 1 or 2");
    for (int a = 0; a < g.dim; ++a) {
      g.shape[a] = header.at("shape").at(a).get<Index>();
      g.spacing[a] = header.at("spacing").at(a).get<double>();
      g.origin[a] = header.at("origin").at(a).get<double>();
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("field header incomplete: ") + e.what());
  }
  g.validate();
  ScalarField::Values v(g.size());
  const Index rows = g.shape[0], cols = g.dim == 2 ? g.shape[1] : 1;
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw DomainError("field file has too few rows");
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (Index j = 0; j < cols; ++j) {
      double x = 0.0;
      const auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc()) throw DomainError("malformed value in field row " + std::to_string(i));
      v[g.flat(i, j)] = x;
      p = res.ptr;
      if (j + 1 < cols) {
        if (p == end || *p != ',') throw DomainError("field row " + std::to_string(i) + " is too short");
        ++p;
      }
    }
    if (p != end && *p != '\r') throw DomainError("field row " + std::to_string(i) + " is too long");
  }
  return ScalarField(g, std::move(v));
}

ScalarField read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DomainError("cannot open " + path.string());
  return read_field_csv(is);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) { return fnv1a64_hex(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DomainError("cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw DomainError("write failed for " + path.string());
}

}  // namespace mfg
