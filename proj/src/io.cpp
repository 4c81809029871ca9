#include "polyreg/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "polyreg/error.hpp"

namespace polyreg {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitFields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

double parseNumber(const std::string& field, const std::string& source, std::size_t line,
                   const std::string& column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw InputError(where(source, line) + "column '" + column + "': cannot parse '" + field + "' as a number");
    }
    if (!std::isfinite(v)) throw InputError(where(source, line) + "column '" + column + "': non-finite value");
    return v;
}

struct Header {
    std::vector<std::string> names;
    std::vector<int> xColumn;  // field index of x1..xd
    int yColumn = -1;
    int wColumn = -1;
};

Header parseHeader(const std::string& line, const std::string& source, std::size_t lineNo, bool needY) {
    Header h;
    h.names = splitFields(line);
    std::map<int, int> xs;
    for (std::size_t i = 0; i < h.names.size(); ++i) {
        const std::string& n = h.names[i];
        int axis = 0;
        if (n == "y") {
            h.yColumn = static_cast<int>(i);
        } else if (n == "w") {
            h.wColumn = static_cast<int>(i);
        } else if (n.size() > 1 && n[0] == 'x' &&
                   std::from_chars(n.data() + 1, n.data() + n.size(), axis).ptr == n.data() + n.size() && axis >= 1) {
            if (!xs.emplace(axis, static_cast<int>(i)).second) {
                throw InputError(where(source, lineNo) + "duplicate column '" + n + "'");
            }
        } else {
            throw InputError(where(source, lineNo) + "unexpected column '" + n + "' (expected x1..xd, y, w)");
        }
    }
    if (xs.empty()) throw InputError(where(source, lineNo) + "missing column 'x1'");
    for (int a = 1; a <= static_cast<int>(xs.size()); ++a) {
        const auto it = xs.find(a);
        if (it == xs.end()) throw InputError(where(source, lineNo) + "missing column 'x" + std::to_string(a) + "'");
        h.xColumn.push_back(it->second);
    }
    if (needY && h.yColumn < 0) throw InputError(where(source, lineNo) + "missing column 'y'");
    return h;
}

template <class Row>
void readRows(std::istream& in, const std::string& source, bool needY, Row&& row) {
    std::string line;
    std::size_t lineNo = 0;
    std::optional<Header> header;
    while (std::getline(in, line)) {
        ++lineNo;
        if (blank(line)) continue;
        if (!header) {
            header = parseHeader(line, source, lineNo, needY);
            continue;
        }
        const auto fields = splitFields(line);
        if (fields.size() != header->names.size()) {
            throw InputError(where(source, lineNo) + "expected " + std::to_string(header->names.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        row(*header, fields, lineNo);
    }
    if (!header) throw InputError(source + ": empty input, no header line");
}

}  // namespace

WeightedSample readCsv(std::istream& in, const std::string& source) {
    std::optional<WeightedSample> sample;
    std::vector<double> x;
    readRows(in, source, true, [&](const Header& h, const std::vector<std::string>& f, std::size_t lineNo) {
        if (!sample) sample.emplace(h.xColumn.size());
        x.resize(h.xColumn.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = parseNumber(f[h.xColumn[k]], source, lineNo, h.names[h.xColumn[k]]);
        }
        const double y = parseNumber(f[h.yColumn], source, lineNo, "y");
        const double w = h.wColumn >= 0 ? parseNumber(f[h.wColumn], source, lineNo, "w") : 1.0;
        sample->add(x, y, w);
    });
    if (!sample || sample->empty()) throw InputError(source + ": no data rows");
    return std::move(*sample);
}

WeightedSample readCsvFile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return readCsv(in, path.string());
}

std::vector<std::vector<double>> readPointsCsv(std::istream& in, const std::string& source) {
    std::vector<std::vector<double>> points;
    readRows(in, source, false, [&](const Header& h, const std::vector<std::string>& f, std::size_t lineNo) {
        std::vector<double> x(h.xColumn.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = parseNumber(f[h.xColumn[k]], source, lineNo, h.names[h.xColumn[k]]);
        }
        points.push_back(std::move(x));
    });
    return points;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgmToken(std::istream& in, const std::string& source) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (tok.empty()) throw InputError(source + ": truncated PGM header");
    if (c == '#') in.unget();
    return tok;
}

int pgmInt(std::istream& in, const std::string& source, const char* what) {
    const std::string t = pgmToken(in, source);
    int v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || v <= 0) {
        throw InputError(source + ": invalid PGM " + what + " '" + t + "'");
    }
    return v;
}

}  // namespace

GrayImage readPgm(std::istream& in, const std::string& source) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') {
        throw InputError(source + ": not a binary PGM (expected magic 'P5')");
    }
    GrayImage img;
    img.width = pgmInt(in, source, "width");
    img.height = pgmInt(in, source, "height");
    const int maxval = pgmInt(in, source, "maxval");
    if (maxval > 255) throw InputError(source + ": only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ")");
    // pgmToken consumed exactly one whitespace byte after maxval.
    img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) throw InputError(source + ": truncated PGM data");
    if (maxval != 255) {
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::lround(255.0 * std::min<int>(p, maxval) / maxval));
    }
    return img;
}

GrayImage readPgmFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return readPgm(in, path.string());
}

void writePgm(std::ostream& out, const GrayImage& image) {
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

std::string sha256Hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 15]);
    }
    return hex;
}

std::string fileSha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256Hex(ss.str());
}

std::string buildTimestamp() {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        long long v = 0;
        const std::string_view s(env);
        if (std::from_chars(s.data(), s.data() + s.size(), v).ec == std::errc()) t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

// JSON has no inf/nan; those travel as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double readNum(const json& j, double ifNull = std::numeric_limits<double>::infinity()) {
    return j.is_null() ? ifNull : j.get<double>();
}

json vectorJson(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json matrixJson(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(std::move(row));
    }
    return a;
}

Eigen::VectorXd readVector(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd readMatrix(const json& j, Eigen::Index n) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw InputError("covariance matrix has the wrong shape");
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != n) throw InputError("covariance matrix has the wrong shape");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

json reportJson(const DegreeReport& r) {
    return {{"degree", r.degree},
            {"nCoeffs", r.nCoeffs},
            {"lossMin", num(r.lossMin)},
            {"bias", num(r.bias)},
            {"expectedLoss", num(r.expectedLoss)},
            {"sigma", num(r.sigma)},
            {"approximation", blockModeName(r.approximation)},
            {"conditionEstimate", num(r.conditionEstimate)},
            {"biasFloored", r.biasFloored},
            {"excluded", r.excluded}};
}

DegreeReport reportFromJson(const json& j) {
    DegreeReport r;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.degree = j.at("degree").get<int>();
    r.nCoeffs = j.at("nCoeffs").get<std::size_t>();
    r.lossMin = readNum(j.at("lossMin"), nan);
    r.bias = readNum(j.at("bias"), nan);
    r.expectedLoss = readNum(j.at("expectedLoss"), nan);
    r.sigma = readNum(j.at("sigma"), nan);
    r.approximation = blockModeFromString(j.at("approximation").get<std::string>());
    r.conditionEstimate = readNum(j.at("conditionEstimate"));
    r.biasFloored = j.at("biasFloored").get<bool>();
    r.excluded = j.at("excluded").get<bool>();
    return r;
}

json leafJson(const LeafModel& leaf) {
    json reports = json::array();
    for (const auto& r : leaf.reports) reports.push_back(reportJson(r));
    return {{"affine", {{"center", leaf.basis.affine().center}, {"scale", leaf.basis.affine().scale}}},
            {"degree", leaf.basis.degree()},
            {"coeffs", vectorJson(leaf.coeffs)},
            {"coeffCov", matrixJson(leaf.coeffCov)},
            {"covFactor", {{"r", matrixJson(leaf.covFactor.r)}, {"b", matrixJson(leaf.covFactor.b)}}},
            {"diagnostics",
             {{"conditionEstimate", num(leaf.diagnostics.conditionEstimate)},
              {"psdClipped", leaf.diagnostics.psdClipped},
              {"lossMin", num(leaf.lossMin)},
              {"scanOptimum", leaf.scanOptimum},
              {"degenerate", leaf.degenerate},
              {"note", leaf.note},
              {"reports", std::move(reports)}}},
            {"count", leaf.count},
            {"bbox", {{"lower", leaf.lower}, {"upper", leaf.upper}}}};
}

LeafModel leafFromJson(const json& j, int dim) {
    AffineMap affine{j.at("affine").at("center").get<std::vector<double>>(),
                     j.at("affine").at("scale").get<std::vector<double>>()};
    if (static_cast<int>(affine.center.size()) != dim || affine.scale.size() != affine.center.size()) {
        throw InputError("leaf affine map does not match the model dimension");
    }
    BasisSpec basis(j.at("degree").get<int>(), std::move(affine));
    Eigen::VectorXd coeffs = readVector(j.at("coeffs"));
    if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
        throw InputError("leaf has " + std::to_string(coeffs.size()) + " coefficients, expected " +
                         std::to_string(basis.size()));
    }
    Eigen::MatrixXd cov = readMatrix(j.at("coeffCov"), coeffs.size());
    CovarianceFactor factor{readMatrix(j.at("covFactor").at("r"), coeffs.size()),
                            readMatrix(j.at("covFactor").at("b"), coeffs.size())};
    LeafModel leaf{std::move(basis), std::move(coeffs), std::move(cov), std::move(factor)};
    const json& d = j.at("diagnostics");
    leaf.diagnostics.conditionEstimate = readNum(d.at("conditionEstimate"));
    leaf.diagnostics.psdClipped = d.at("psdClipped").get<bool>();
    leaf.lossMin = readNum(d.at("lossMin"), std::numeric_limits<double>::quiet_NaN());
    leaf.scanOptimum = d.at("scanOptimum").get<int>();
    leaf.degenerate = d.at("degenerate").get<bool>();
    leaf.note = d.at("note").get<std::string>();
    for (const auto& r : d.at("reports")) leaf.reports.push_back(reportFromJson(r));
    leaf.count = j.at("count").get<std::int64_t>();
    leaf.lower = j.at("bbox").at("lower").get<std::vector<double>>();
    leaf.upper = j.at("bbox").at("upper").get<std::vector<double>>();
    return leaf;
}

TreeConfig configFromJson(const json& j) {
    TreeConfig cfg;
    if (j.contains("nMax")) cfg.select.nMax = j.at("nMax").get<int>();
    if (j.contains("scanExtra")) cfg.select.scanExtra = j.at("scanExtra").get<int>();
    if (j.contains("significance")) cfg.select.significance = j.at("significance").get<double>();
    if (j.contains("blockMode")) cfg.select.blockMode = blockModeFromString(j.at("blockMode").get<std::string>());
    if (j.contains("conditionGuard")) cfg.select.conditionGuard = j.at("conditionGuard").get<double>();
    if (j.contains("minLeaf")) cfg.stop.minLeaf = j.at("minLeaf").get<int>();
    if (j.contains("maxDepth")) cfg.stop.maxDepth = j.at("maxDepth").get<int>();
    return cfg;
}

}  // namespace

json configJson(const TreeConfig& cfg) {
    return {{"nMax", cfg.select.nMax},
            {"scanExtra", cfg.select.scanExtra},
            {"significance", cfg.select.significance},
            {"blockMode", blockModeName(cfg.select.blockMode)},
            {"conditionGuard", cfg.select.conditionGuard},
            {"minLeaf", cfg.stop.minLeaf},
            {"maxDepth", cfg.stop.maxDepth}};
}

json toJson(const ModelDocument& doc) {
    json nodes = json::array();
    for (const auto& n : doc.tree.nodes) {
        json node = {{"depth", n.depth}};
        if (n.isLeaf()) {
            node["leaf"] = leafJson(*n.leaf);
        } else {
            node["rule"] = {{"point", n.rule->point}, {"normal", n.rule->normal}};
            node["left"] = n.left;
            node["right"] = n.right;
        }
        nodes.push_back(std::move(node));
    }
    return {{"format", "polyreg-model"},
            {"version", doc.version},
            {"command", doc.command},
            {"config", doc.config},
            {"tree", {{"dim", doc.tree.dim}, {"nodes", std::move(nodes)}}},
            {"provenance",
             {{"inputHash", doc.provenance.inputHash},
              {"timestamp", doc.provenance.timestamp},
              {"seed", doc.provenance.seed}}}};
}

ModelDocument modelFromJson(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "polyreg-model") throw InputError("not a polyreg model document");
        ModelDocument doc;
        doc.version = j.at("version").get<int>();
        if (doc.version != ModelDocument::kVersion) {
            throw InputError("unsupported model document version " + std::to_string(doc.version));
        }
        doc.command = j.at("command").get<std::string>();
        doc.config = j.at("config");
        doc.tree.config = configFromJson(doc.config);
        const json& t = j.at("tree");
        doc.tree.dim = t.at("dim").get<int>();
        if (doc.tree.dim < 1) throw InputError("model dimension must be >= 1");
        const json& nodes = t.at("nodes");
        if (!nodes.is_array() || nodes.empty()) throw InputError("model has no nodes");
        const int count = static_cast<int>(nodes.size());
        for (const auto& jn : nodes) {
            RegionNode n;
            n.depth = jn.at("depth").get<int>();
            if (jn.contains("leaf")) {
                n.leaf = leafFromJson(jn.at("leaf"), doc.tree.dim);
            } else {
                SplitRule rule{jn.at("rule").at("point").get<std::vector<double>>(),
                               jn.at("rule").at("normal").get<std::vector<double>>()};
                if (static_cast<int>(rule.point.size()) != doc.tree.dim ||
                    rule.normal.size() != rule.point.size()) {
                    throw InputError("split rule does not match the model dimension");
                }
                n.rule = std::move(rule);
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
                const int self = static_cast<int>(doc.tree.nodes.size());
                if (n.left <= self || n.right <= self || n.left >= count || n.right >= count) {
                    throw InputError("node " + std::to_string(self) + " has invalid child indices");
                }
            }
            doc.tree.nodes.push_back(std::move(n));
        }
        const json& p = j.at("provenance");
        doc.provenance.inputHash = p.at("inputHash").get<std::string>();
        doc.provenance.timestamp = p.at("timestamp").get<std::string>();
        doc.provenance.seed = p.at("seed").get<std::uint64_t>();
        return doc;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model document: ") + e.what());
    }
}

std::string serializeModel(const ModelDocument& doc) { return toJson(doc).dump(2) + "\n"; }

ModelDocument parseModel(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("model document is not valid JSON: ") + e.what());
    }
    return modelFromJson(j);
}

ModelDocument readModelFile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parseModel(ss.str());
}

RegionTree singleLeafTree(const PolynomialModel& model, const WeightedSample& sample) {
    LeafModel leaf{model.basis, model.coeffs, model.coeffCov, model.covFactor};
    leaf.count = static_cast<std::int64_t>(sample.size());
    leaf.lossMin = model.lossMin;
    leaf.diagnostics = model.diagnostics;
    leaf.scanOptimum = model.basis.degree();
    leaf.lower.assign(sample.dim(), std::numeric_limits<double>::infinity());
    leaf.upper.assign(sample.dim(), -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < sample.size(); ++j) {
        for (std::size_t k = 0; k < sample.dim(); ++k) {
            leaf.lower[k] = std::min(leaf.lower[k], sample.x(j)[k]);
            leaf.upper[k] = std::max(leaf.upper[k], sample.x(j)[k]);
        }
    }
    RegionTree tree;
    tree.dim = static_cast<int>(sample.dim());
    tree.nodes.emplace_back();
    tree.nodes[0].leaf = std::move(leaf);
    return tree;
}

}  // namespace polyreg
