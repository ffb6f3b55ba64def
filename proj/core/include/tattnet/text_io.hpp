#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace tattnet {

/// Decimal text with 17 significant digits, which round-trips every finite
/// double exactly. Non-finite values throw.
std::string format_real(double value);

void append_real(std::string& out, double value);
void append_real_array(std::string& out, std::span<const double> values);
std::string json_quote(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace tattnet
