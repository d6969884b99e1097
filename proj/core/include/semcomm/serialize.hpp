#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

// Little-endian primitives shared by the parameter and checkpoint formats.
namespace semcomm::io {

void write_u32(std::ostream& out, std::uint32_t value);
void write_u64(std::ostream& out, std::uint64_t value);
void write_f64(std::ostream& out, double value);
void write_string(std::ostream& out, const std::string& value);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);

}  // namespace semcomm::io
