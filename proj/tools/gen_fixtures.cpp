// Writes the deterministic test fixtures into a directory.
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "fixtures.hpp"

namespace {

std::string fmt(double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

void writeCsv(const std::filesystem::path& path, const polyreg::WeightedSample& s) {
    std::ofstream f(path);
    for (std::size_t k = 1; k <= s.dim(); ++k) f << 'x' << k << ',';
    f << "y\n";
    for (std::size_t j = 0; j < s.size(); ++j) {
        for (double v : s.x(j)) f << fmt(v) << ',';
        f << fmt(s.y(j)) << '\n';
    }
}

void writeImage(const std::filesystem::path& path, const polyreg::GrayImage& img) {
    std::ofstream f(path, std::ios::binary);
    polyreg::writePgm(f, img);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_fixtures <output-dir>\n";
        return 2;
    }
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);
    namespace fx = polyreg::fixtures;
    writeCsv(dir / "wavy.csv", fx::wavy());
    writeCsv(dir / "step.csv", fx::step());
    std::ofstream(dir / "linear3.csv") << "x1,y\n0,1\n1,3\n2,5\n";
    writeImage(dir / "gray.pgm", fx::uniformGray());
    writeImage(dir / "two_tone.pgm", fx::twoTone());
    writeImage(dir / "scene.pgm", fx::scene());
    return 0;
}
