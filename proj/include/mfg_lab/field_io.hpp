#pragma once

// Textual field container: one JSON header line (dim, shape, spacing,
// origin, name) followed by row-major values, one grid row per line,
// written with 17 significant digits so that reading back is bit-exact.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "mfg_lab/grid.hpp"

namespace mfg {

void write_field_csv(std::ostream& os, const ScalarField& field, const std::string& name = "");
void write_field_csv(const std::filesystem::path& path, const ScalarField& field,
                     const std::string& name = "");

/// Throws DomainError on malformed input.
ScalarField read_field_csv(std::istream& is);
ScalarField read_field_csv(const std::filesystem::path& path);

/// Shortest text of `v` with 17 significant digits.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mfg
