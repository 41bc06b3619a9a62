#pragma once

// Plain-text datasets: CSV with a header row, LF line endings and floats
// printed with 17 significant digits (round-trip exact, locale independent).

#include <filesystem>
#include <string>
#include <vector>

namespace qtraj {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string format_double(double x);

std::string to_csv(const Table& t);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_table(const std::filesystem::path& path, const Table& t);
Table read_table(const std::filesystem::path& path);

} // namespace qtraj
