#include "polyreg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "polyreg/error.hpp"
#include "polyreg/modelselect.hpp"
#include "polyreg/oracle.hpp"
#include "polyreg/polyfit.hpp"

namespace polyreg {

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fixed(double v, int width, int precision = 6) {
    std::ostringstream s;
    if (std::isfinite(v)) {
        s << std::setw(width) << std::setprecision(precision) << v;
    } else {
        s << std::setw(width) << fmt(v);
    }
    return s.str();
}

std::string monomialLabel(const Exponent& e) {
    std::string s;
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (e[k] == 0) continue;
        if (!s.empty()) s += '*';
        s += "x" + std::to_string(k + 1);
        if (e[k] > 1) s += "^" + std::to_string(e[k]);
    }
    return s.empty() ? "1" : s;
}

void writeFile(const std::string& path, const std::string& content, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << content;
    if (!f) throw InputError("failed writing '" + path + "'");
}

void printReports(std::ostream& out, const std::vector<DegreeReport>& reports, int chosen) {
    out << "degree  nCoeffs       lossMin  expectedLoss         sigma     condition\n";
    for (const auto& r : reports) {
        out << std::setw(6) << r.degree << std::setw(9) << r.nCoeffs;
        if (r.excluded) {
            out << "      excluded (condition " << fmt(r.conditionEstimate) << ")\n";
            continue;
        }
        out << fixed(r.lossMin, 14) << fixed(r.expectedLoss, 14) << fixed(r.sigma, 14)
            << fixed(r.conditionEstimate, 14, 3) << (r.degree == chosen ? "  *" : "") << '\n';
    }
}

void printCoefficients(std::ostream& out, const PolynomialModel& model) {
    const Eigen::VectorXd phys = physicalCoefficients(model.basis, model.coeffs);
    out << "coefficients (physical monomials):\n";
    for (std::size_t i = 0; i < model.basis.size(); ++i) {
        out << "  " << std::setw(12) << std::left << monomialLabel(model.basis.monomials().exponent(i)) << std::right
            << ' ' << fmt(phys(static_cast<Eigen::Index>(i))) << '\n';
    }
}

std::pair<int, int> parseRange(const std::string& s) {
    const auto dots = s.find("..");
    int lo = 0;
    int hi = 0;
    const bool ok = dots != std::string::npos &&
                    std::from_chars(s.data(), s.data() + dots, lo).ptr == s.data() + dots &&
                    std::from_chars(s.data() + dots + 2, s.data() + s.size(), hi).ptr == s.data() + s.size();
    if (!ok || lo < 0 || hi < lo) throw InputError("--scan expects lo..hi with 0 <= lo <= hi, got '" + s + "'");
    return {lo, hi};
}

struct TreeFlags {
    int nMax = 1;
    int scanExtra = 2;
    double significance = 0.0;
    int minLeaf = 0;
    int maxDepth = 24;
    std::string blockMode = "upper-left";
    std::uint64_t seed = 0;

    void add(CLI::App* app, int defaultNMax) {
        nMax = defaultNMax;
        app->add_option("--nmax", nMax, "Highest polynomial degree kept in a leaf")->capture_default_str();
        app->add_option("--scan-extra", scanExtra, "Degrees scanned beyond nmax")->capture_default_str();
        app->add_option("--significance", significance, "Multiples of sigma added to the expected loss")
            ->capture_default_str();
        app->add_option("--min-leaf", minLeaf, "Minimum points per leaf (0: 4 * basis size)")->capture_default_str();
        app->add_option("--max-depth", maxDepth, "Maximum tree depth")->capture_default_str();
        app->add_option("--block-mode", blockMode, "Bias approximation: upper-left or full")->capture_default_str();
        app->add_option("--seed", seed, "Seed recorded in the model provenance")->capture_default_str();
    }

    TreeConfig config() const {
        TreeConfig cfg;
        cfg.select.nMax = nMax;
        cfg.select.scanExtra = scanExtra;
        cfg.select.significance = significance;
        cfg.select.blockMode = blockModeFromString(blockMode);
        cfg.stop.minLeaf = minLeaf;
        cfg.stop.maxDepth = maxDepth;
        cfg.threads = threadsFromEnv();
        return cfg;
    }
};

ModelDocument makeDocument(const std::string& command, nlohmann::json config, RegionTree tree,
                           const std::string& inputPath, std::uint64_t seed) {
    ModelDocument doc;
    doc.command = command;
    doc.config = std::move(config);
    doc.tree = std::move(tree);
    doc.provenance = {"sha256:" + fileSha256(inputPath), buildTimestamp(), seed};
    return doc;
}

// fit ----------------------------------------------------------------------

struct FitFlags {
    std::string input;
    std::string output;
    int degree = -1;
    std::string scan;
    double significance = 0.0;
    std::string blockMode = "upper-left";
    double guard = kConditionGuard;
    bool raw = false;
};

int cmdFit(const FitFlags& f, std::ostream& out) {
    const WeightedSample sample = readCsvFile(f.input);
    const AffineMap affine = f.raw ? AffineMap::identity(sample.dim()) : AffineMap::standardizing(sample);
    const BlockMode mode = blockModeFromString(f.blockMode);
    if (f.significance < 0.0) throw InputError("--significance must be >= 0");

    nlohmann::json config = {{"standardize", !f.raw},
                             {"blockMode", blockModeName(mode)},
                             {"conditionGuard", f.guard},
                             {"significance", f.significance}};
    std::vector<DegreeReport> reports;
    std::optional<PolynomialModel> model;
    if (f.scan.empty()) {
        const int degree = f.degree < 0 ? 1 : f.degree;
        config["degree"] = degree;
        model = fitPolynomial(sample, BasisSpec(degree, affine), f.guard);
        reports.push_back(expectedLoss(*model, mode));
    } else {
        if (f.degree >= 0) throw InputError("--degree and --scan are mutually exclusive");
        const auto [lo, hi] = parseRange(f.scan);
        config["scan"] = {{"lo", lo}, {"hi", hi}};
        const auto pv = parameterVector(accumulate(sample, BasisSpec(hi, affine)));
        Selection sel = scanDegrees(pv, lo, hi, f.significance, mode, f.guard);
        model = sel.model(sel.chosen);
        reports = std::move(sel.reports);
    }

    out << "points " << sample.size() << ", dimension " << sample.dim() << ", sum of weights "
        << fmt(sample.sumWeights()) << '\n';
    printReports(out, reports, model->basis.degree());
    out << "chosen degree " << model->basis.degree() << '\n';
    printCoefficients(out, *model);
    if (model->diagnostics.psdClipped) out << "note: moment covariance was projected onto the PSD cone\n";

    if (!f.output.empty()) {
        RegionTree tree = singleLeafTree(*model, sample);
        tree.nodes[0].leaf->reports = std::move(reports);
        writeFile(f.output, serializeModel(makeDocument("fit", std::move(config), std::move(tree), f.input, 0)));
    }
    return 0;
}

// tree ---------------------------------------------------------------------

int cmdTree(const std::string& input, const std::string& output, const TreeFlags& flags, bool verbose,
            std::ostream& out) {
    const WeightedSample sample = readCsvFile(input);
    const TreeConfig cfg = flags.config();
    const RegionTree tree = growTree(sample, cfg);
    out << "leaves " << tree.leafCount() << ", depth " << tree.depth() << ", total loss " << fmt(tree.totalLoss())
        << '\n';
    if (verbose) {
        out << "  leaf     count  degree       lossMin  bbox\n";
        for (int id : tree.leafIds()) {
            const auto& leaf = *tree.nodes[static_cast<std::size_t>(id)].leaf;
            out << std::setw(6) << id << std::setw(10) << leaf.count << std::setw(8) << leaf.basis.degree()
                << fixed(leaf.lossMin, 14) << "  [";
            for (std::size_t k = 0; k < leaf.lower.size(); ++k) {
                out << (k ? ", " : "") << fmt(leaf.lower[k]) << ".." << fmt(leaf.upper[k]);
            }
            out << "]" << (leaf.degenerate ? "  degenerate: " + leaf.note : "") << '\n';
        }
    }
    if (!output.empty()) {
        writeFile(output, serializeModel(makeDocument("tree", configJson(cfg), tree, input, flags.seed)));
    }
    return 0;
}

// bands --------------------------------------------------------------------

std::vector<std::vector<double>> gridPoints(const std::vector<std::string>& specs, int dim) {
    if (static_cast<int>(specs.size()) != dim) {
        throw InputError("--grid needs one lo:hi:n spec per input dimension (" + std::to_string(dim) + ")");
    }
    std::vector<std::vector<double>> axes;
    for (const auto& s : specs) {
        const auto a = s.find(':');
        const auto b = s.find(':', a == std::string::npos ? a : a + 1);
        double lo = 0.0;
        double hi = 0.0;
        int n = 0;
        const bool ok = a != std::string::npos && b != std::string::npos &&
                        std::from_chars(s.data(), s.data() + a, lo).ptr == s.data() + a &&
                        std::from_chars(s.data() + a + 1, s.data() + b, hi).ptr == s.data() + b &&
                        std::from_chars(s.data() + b + 1, s.data() + s.size(), n).ptr == s.data() + s.size();
        if (!ok || n < 1 || !(lo <= hi)) throw InputError("invalid grid spec '" + s + "', expected lo:hi:n");
        std::vector<double> axis(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
        axes.push_back(std::move(axis));
    }
    std::vector<std::vector<double>> points(1);
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : points) {
            for (double v : axis) {
                next.push_back(p);
                next.back().push_back(v);
            }
        }
        points = std::move(next);
    }
    return points;
}

std::string bandSvg(const std::vector<std::vector<double>>& pts, const std::vector<TreePrediction>& pred) {
    constexpr double kW = 800.0;
    constexpr double kH = 500.0;
    constexpr double kPad = 40.0;
    double x0 = pts.front()[0], x1 = x0, y0 = pred.front().value, y1 = y0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double s = std::sqrt(pred[i].variance);
        x0 = std::min(x0, pts[i][0]);
        x1 = std::max(x1, pts[i][0]);
        y0 = std::min(y0, pred[i].value - s);
        y1 = std::max(y1, pred[i].value + s);
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    auto px = [&](double x) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); };
    auto py = [&](double y) { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); };

    std::ostringstream s;
    s << std::setprecision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    s << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad << "\" height=\""
      << kH - 2 * kPad << "\" fill=\"none\" stroke=\"#999\"/>\n";
    s << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        s << px(pts[i][0]) << ',' << py(pred[i].value + std::sqrt(pred[i].variance)) << ' ';
    }
    for (std::size_t i = pts.size(); i-- > 0;) {
        s << px(pts[i][0]) << ',' << py(pred[i].value - std::sqrt(pred[i].variance)) << ' ';
    }
    s << "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) s << px(pts[i][0]) << ',' << py(pred[i].value) << ' ';
    s << "\"/>\n";
    s << "<text x=\"" << kPad << "\" y=\"" << kH - 10 << "\" font-size=\"12\">x " << x0 << " .. " << x1
      << "</text>\n";
    s << "<text x=\"" << kPad << "\" y=\"" << 25 << "\" font-size=\"12\">F(x) +/- sigma, " << y0 << " .. " << y1
      << "</text>\n</svg>\n";
    return s.str();
}

int cmdBands(const std::string& modelPath, const std::vector<std::string>& grid, const std::string& pointsPath,
             const std::string& output, const std::string& svg, std::ostream& out) {
    const ModelDocument doc = readModelFile(modelPath);
    std::vector<std::vector<double>> pts;
    if (!pointsPath.empty()) {
        if (!grid.empty()) throw InputError("--grid and --points are mutually exclusive");
        std::ifstream in(pointsPath);
        if (!in) throw InputError("cannot open '" + pointsPath + "'");
        pts = readPointsCsv(in, pointsPath);
        for (const auto& p : pts) {
            if (static_cast<int>(p.size()) != doc.tree.dim) {
                throw InputError(pointsPath + ": points have " + std::to_string(p.size()) + " columns, model has " +
                                 std::to_string(doc.tree.dim));
            }
        }
    } else {
        pts = gridPoints(grid, doc.tree.dim);
    }
    if (pts.empty()) throw InputError("no evaluation points");

    std::vector<TreePrediction> pred;
    pred.reserve(pts.size());
    bool anyExtrapolated = false;
    for (const auto& p : pts) {
        pred.push_back(predictTree(doc.tree, p));
        anyExtrapolated = anyExtrapolated || pred.back().extrapolated;
    }

    std::ostringstream csv;
    for (int k = 1; k <= doc.tree.dim; ++k) csv << 'x' << k << ',';
    csv << "value,sigma" << (anyExtrapolated ? ",extrapolated" : "") << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (double v : pts[i]) csv << fmt(v) << ',';
        csv << fmt(pred[i].value) << ',' << fmt(std::sqrt(pred[i].variance));
        if (anyExtrapolated) csv << ',' << (pred[i].extrapolated ? 1 : 0);
        csv << '\n';
    }
    if (output.empty()) {
        out << csv.str();
    } else {
        writeFile(output, csv.str());
    }
    if (!svg.empty()) {
        if (doc.tree.dim != 1) throw InputError("SVG band plots need a one-dimensional model");
        writeFile(svg, bandSvg(pts, pred));
    }
    return 0;
}

// remodel-image --------------------------------------------------------------

int cmdRemodel(const std::string& input, const std::string& output, const std::string& modelOut,
               const TreeFlags& flags, std::ostream& out) {
    const GrayImage img = readPgmFile(input);
    const TreeConfig cfg = flags.config();
    const RemodelResult r = remodelImage(img, cfg);
    out << "image " << img.width << "x" << img.height << ", leaves " << r.tree.leafCount() << ", depth "
        << r.tree.depth() << ", PSNR " << (std::isinf(r.psnr) ? std::string("inf") : fixed(r.psnr, 0, 5))
        << " dB\n";
    std::ostringstream pgm;
    writePgm(pgm, r.image);
    writeFile(output, pgm.str(), true);
    if (!modelOut.empty()) {
        writeFile(modelOut,
                  serializeModel(makeDocument("remodel-image", configJson(cfg), r.tree, input, flags.seed)));
    }
    return 0;
}

// bootstrap-check ------------------------------------------------------------

std::vector<std::vector<double>> quartilePoints(const WeightedSample& s) {
    std::vector<std::vector<double>> pts(3, std::vector<double>(s.dim()));
    std::vector<double> col(s.size());
    for (std::size_t k = 0; k < s.dim(); ++k) {
        for (std::size_t j = 0; j < s.size(); ++j) col[j] = s.x(j)[k];
        std::sort(col.begin(), col.end());
        for (int q = 0; q < 3; ++q) {
            const double pos = 0.25 * (q + 1) * static_cast<double>(col.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, col.size() - 1);
            pts[static_cast<std::size_t>(q)][k] = col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
        }
    }
    return pts;
}

int cmdBootstrap(const std::string& input, int degree, int replicas, std::uint64_t seed, double tolerance,
                 std::ostream& out) {
    const WeightedSample sample = readCsvFile(input);
    const PolynomialModel model = fitPolynomial(sample, degree);
    const auto pts = quartilePoints(sample);
    const BootstrapReport rep = bootstrapFit(sample, model.basis, replicas, seed, pts, threadsFromEnv());
    out << "degree " << degree << ", replicas " << rep.replicas << " (" << rep.dropped << " dropped), seed "
        << rep.seed << '\n';
    out << "quantile      analytic     bootstrap   rel.diff\n";
    double worst = 0.0;
    static constexpr const char* kNames[] = {"25%", "50%", "75%"};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double a = std::sqrt(predict(model, pts[i]).variance);
        const double b = rep.bandAtPoints[i];
        const double rel = std::abs(a - b) / std::max(b, std::numeric_limits<double>::min());
        worst = std::max(worst, rel);
        out << std::setw(8) << kNames[i] << fixed(a, 14) << fixed(b, 14) << fixed(rel, 11, 3) << '\n';
    }
    out << "coefficient   analytic sd  bootstrap sd\n";
    for (Eigen::Index i = 0; i < model.coeffs.size(); ++i) {
        out << "  " << std::setw(10) << std::left
            << monomialLabel(model.basis.monomials().exponent(static_cast<std::size_t>(i))) << std::right
            << fixed(std::sqrt(model.coeffCov(i, i)), 14) << fixed(std::sqrt(rep.empiricalCoeffCov(i, i)), 14)
            << '\n';
    }
    const bool pass = worst <= tolerance;
    out << (pass ? "PASS" : "FAIL") << ": worst band difference " << fmt(worst) << " (tolerance "
        << fmt(tolerance) << ")\n";
    return pass ? 0 : 1;
}

// fd-check -------------------------------------------------------------------

int cmdFd(const std::string& input, int degree, bool raw, double relStep, double tolerance, std::ostream& out) {
    const WeightedSample sample = readCsvFile(input);
    const AffineMap affine = raw ? AffineMap::identity(sample.dim()) : AffineMap::standardizing(sample);
    const PolynomialModel model =
        fitPolynomial(sample, BasisSpec(degree, affine), std::numeric_limits<double>::infinity());
    const FiniteDifferenceReport rep = finiteDifferenceCheck(model, relStep);
    out << "degree " << degree << ", condition estimate " << fmt(model.diagnostics.conditionEstimate) << '\n';
    if (rep.skipped) {
        out << rep.note << '\n';
        return 0;
    }
    const bool pass = rep.maxRelativeError <= tolerance;
    out << (pass ? "PASS" : "FAIL") << ": max relative error " << fmt(rep.maxRelativeError) << " (tolerance "
        << fmt(tolerance) << ")\n";
    return pass ? 0 : 1;
}

}  // namespace

int threadsFromEnv() {
    const char* env = std::getenv("POLYREG_THREADS");
    if (!env) return 1;
    int n = 0;
    const std::string_view s(env);
    if (std::from_chars(s.data(), s.data() + s.size(), n).ec != std::errc() || n < 1) {
        throw InputError("POLYREG_THREADS must be a positive integer, got '" + std::string(s) + "'");
    }
    return n;
}

WeightedSample imageSample(const GrayImage& image) {
    WeightedSample s(2);
    s.reserve(image.pixels.size());
    const double sx = image.width > 1 ? 2.0 / (image.width - 1) : 0.0;
    const double sy = image.height > 1 ? 2.0 / (image.height - 1) : 0.0;
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            const double x[2] = {image.width > 1 ? -1.0 + sx * c : 0.0, image.height > 1 ? -1.0 + sy * r : 0.0};
            s.add(x, image.at(c, r));
        }
    }
    return s;
}

RemodelResult remodelImage(const GrayImage& image, const TreeConfig& cfg) {
    const WeightedSample s = imageSample(image);
    RemodelResult r{image, growTree(s, cfg), 0.0};
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double v = predictTree(r.tree, s.x(j)).value;
        r.image.pixels[j] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    r.psnr = psnr(image, r.image);
    return r;
}

double psnr(const GrayImage& a, const GrayImage& b) {
    if (a.pixels.size() != b.pixels.size() || a.pixels.empty()) throw InputError("images differ in size");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(255.0 * 255.0 / mse);
}

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Piecewise polynomial regression with moment-based uncertainties", "polyreg"};
    app.require_subcommand(1);

    FitFlags fit;
    auto* fitCmd = app.add_subcommand("fit", "Fit one polynomial, or scan a degree range and pick the best");
    fitCmd->add_option("input", fit.input, "CSV with x1..xd, y and optional w")->required();
    fitCmd->add_option("-o,--output", fit.output, "Model document to write");
    fitCmd->add_option("--degree", fit.degree, "Fit exactly this degree (default 1)");
    fitCmd->add_option("--scan", fit.scan, "Degree range lo..hi to scan");
    fitCmd->add_option("--significance", fit.significance, "Multiples of sigma added to the expected loss");
    fitCmd->add_option("--block-mode", fit.blockMode, "Bias approximation: upper-left or full");
    fitCmd->add_option("--guard", fit.guard, "Largest accepted Gram condition estimate")->capture_default_str();
    fitCmd->add_flag("--raw", fit.raw, "Use raw monomials instead of standardized inputs");

    std::string treeIn;
    std::string treeOut;
    bool verbose = false;
    TreeFlags treeFlags;
    auto* treeCmd = app.add_subcommand("tree", "Grow a piecewise polynomial tree");
    treeCmd->add_option("input", treeIn, "CSV with x1..xd, y and optional w")->required();
    treeCmd->add_option("-o,--output", treeOut, "Model document to write");
    treeCmd->add_flag("-v,--verbose", verbose, "List every leaf");
    treeFlags.add(treeCmd, 1);

    std::string bandsModel;
    std::vector<std::string> grid;
    std::string pointsPath;
    std::string bandsOut;
    std::string svg;
    auto* bandsCmd = app.add_subcommand("bands", "Evaluate F(x) and its standard deviation");
    bandsCmd->add_option("model", bandsModel, "Model document")->required();
    bandsCmd->add_option("--grid", grid, "lo:hi:n per input dimension, in axis order");
    bandsCmd->add_option("--points", pointsPath, "CSV with x1..xd columns");
    bandsCmd->add_option("-o,--output", bandsOut, "CSV to write (default stdout)");
    bandsCmd->add_option("--svg", svg, "Band plot to write (one-dimensional models)");

    std::string imgIn;
    std::string imgOut;
    std::string imgModel;
    TreeFlags imgFlags;
    auto* imgCmd = app.add_subcommand("remodel-image", "Approximate a grayscale image with polynomial patches");
    imgCmd->add_option("input", imgIn, "Binary PGM (P5)")->required();
    imgCmd->add_option("-o,--output", imgOut, "Reconstructed PGM")->required();
    imgCmd->add_option("--model", imgModel, "Model document to write");
    imgFlags.add(imgCmd, 1);

    std::string bootIn;
    int bootDegree = 1;
    int replicas = 1000;
    std::uint64_t bootSeed = 1;
    double bootTol = 0.15;
    auto* bootCmd = app.add_subcommand("bootstrap-check", "Compare analytic bands with a bootstrap");
    bootCmd->add_option("input", bootIn, "CSV with x1..xd, y and optional w")->required();
    bootCmd->add_option("--degree", bootDegree)->capture_default_str();
    bootCmd->add_option("--replicas", replicas)->capture_default_str();
    bootCmd->add_option("--seed", bootSeed)->capture_default_str();
    bootCmd->add_option("--tolerance", bootTol, "Largest accepted relative difference")->capture_default_str();

    std::string fdIn;
    int fdDegree = 3;
    bool fdRaw = false;
    double relStep = 1e-6;
    double fdTol = 1e-6;
    auto* fdCmd = app.add_subcommand("fd-check", "Finite-difference check of the coefficient derivatives");
    fdCmd->add_option("input", fdIn, "CSV with x1..xd, y and optional w")->required();
    fdCmd->add_option("--degree", fdDegree)->capture_default_str();
    fdCmd->add_flag("--raw", fdRaw, "Use raw monomials instead of standardized inputs");
    fdCmd->add_option("--rel-step", relStep)->capture_default_str();
    fdCmd->add_option("--tolerance", fdTol)->capture_default_str();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fitCmd->parsed()) return cmdFit(fit, out);
        if (treeCmd->parsed()) return cmdTree(treeIn, treeOut, treeFlags, verbose, out);
        if (bandsCmd->parsed()) return cmdBands(bandsModel, grid, pointsPath, bandsOut, svg, out);
        if (imgCmd->parsed()) return cmdRemodel(imgIn, imgOut, imgModel, imgFlags, out);
        if (bootCmd->parsed()) return cmdBootstrap(bootIn, bootDegree, replicas, bootSeed, bootTol, out);
        if (fdCmd->parsed()) return cmdFd(fdIn, fdDegree, fdRaw, relStep, fdTol, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConditioningError& e) {
        err << "numerical error: " << e.what() << " (condition estimate " << fmt(e.conditionEstimate()) << ")\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace polyreg
