#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyreg/partition.hpp"
#include "polyreg/sample.hpp"

namespace polyreg {

// Comma-separated text with a header naming x1..xd, y and optionally w, in
// any column order. Blank lines are skipped. Throws InputError naming the
// source and line for malformed rows, non-finite values and missing
// columns.
WeightedSample readCsv(std::istream& in, const std::string& source = "<input>");
WeightedSample readCsvFile(const std::filesystem::path& path);

// Point list for evaluation: header x1..xd only (y and w are ignored).
std::vector<std::vector<double>> readPointsCsv(std::istream& in, const std::string& source = "<input>");

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

// Binary 8-bit PGM (P5, maxval <= 255). Anything else is an InputError.
GrayImage readPgm(std::istream& in, const std::string& source = "<input>");
GrayImage readPgmFile(const std::filesystem::path& path);
void writePgm(std::ostream& out, const GrayImage& image);

// SHA-256 of a byte string, lowercase hex.
std::string sha256Hex(const std::string& bytes);
std::string fileSha256(const std::filesystem::path& path);

// SOURCE_DATE_EPOCH when set, else the epoch, as UTC ISO 8601.
std::string buildTimestamp();

struct Provenance {
    std::string inputHash;
    std::string timestamp;
    std::uint64_t seed = 0;
};

struct ModelDocument {
    static constexpr int kVersion = 1;

    int version = kVersion;
    std::string command;  // "fit", "tree" or "remodel-image"
    nlohmann::json config;
    RegionTree tree;
    Provenance provenance;
};

nlohmann::json toJson(const ModelDocument& doc);
ModelDocument modelFromJson(const nlohmann::json& j);

std::string serializeModel(const ModelDocument& doc);
ModelDocument parseModel(const std::string& text);
ModelDocument readModelFile(const std::filesystem::path& path);

// Echo of the tree configuration as stored in documents.
nlohmann::json configJson(const TreeConfig& cfg);

// A single polynomial model wrapped as a one-leaf tree.
RegionTree singleLeafTree(const PolynomialModel& model, const WeightedSample& sample);

}  // namespace polyreg
