#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "polyreg/io.hpp"
#include "polyreg/partition.hpp"

namespace polyreg {

// Runs one command line (args[0] is the program name). Returns the exit
// code: 0 success, 1 numerical failure, 2 input or format error.
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Thread count from POLYREG_THREADS, default 1.
int threadsFromEnv();

struct RemodelResult {
    GrayImage image;
    RegionTree tree;
    double psnr = 0.0;  // +inf for an exact reconstruction
};

// Pixels become points x = (col, row) mapped to [-1, 1]^2 with y the
// intensity; the reconstruction is clipped to [0, 255] and rounded.
WeightedSample imageSample(const GrayImage& image);
RemodelResult remodelImage(const GrayImage& image, const TreeConfig& cfg);
double psnr(const GrayImage& a, const GrayImage& b);

}  // namespace polyreg
