#ifndef NETWATT_NUM_IO_HPP
#define NETWATT_NUM_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace netwatt {

// Shortest decimal form that parses back to the same double. All file formats
// use this so that parse -> write is byte-stable.
std::string num_str(double v);
std::string num_str(std::uint64_t v);
std::string num_str(std::int64_t v);

// "1.4802 uJ" style engineering notation (exponent a multiple of 3), 5
// significant digits, ASCII unit prefixes.
std::string eng_joules(double joules);

// Strict numeric parsing; returns false on trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_u64(std::string_view s, std::uint64_t& out);
bool parse_i64(std::string_view s, std::int64_t& out);

// Whitespace tokenizer for the line-oriented file formats.
std::string_view trim(std::string_view s);
bool next_token(std::string_view& line, std::string_view& tok);

} // namespace netwatt

#endif
