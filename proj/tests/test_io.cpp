#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "polyreg/error.hpp"
#include "polyreg/io.hpp"
#include "support.hpp"

using namespace polyreg;
using namespace polyreg::testing;

namespace {

std::string errorOf(const std::string& text) {
    std::istringstream in(text);
    try {
        readCsv(in, "t.csv");
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("readCsv: columns in any order, optional weights") {
    std::istringstream in("y, x2 ,x1,w\n1,2,3,0.5\n\n4,5,6,2\n");
    const auto s = readCsv(in);
    REQUIRE(s.size() == 2);
    REQUIRE(s.dim() == 2);
    CHECK(s.x(0)[0] == 3.0);
    CHECK(s.x(0)[1] == 2.0);
    CHECK(s.y(1) == 4.0);
    CHECK(s.w(0) == 0.5);
    std::istringstream unweighted("x1,y\n-1.5e-3,+2\n");
    const auto u = readCsv(unweighted);
    CHECK(u.x(0)[0] == -1.5e-3);
    CHECK(u.w(0) == 1.0);
}

TEST_CASE("readCsv: errors name the line or the column") {
    CHECK(errorOf("x1,z\n1,2\n").find("'z'") != std::string::npos);
    CHECK(errorOf("x1,w\n1,2\n").find("missing column 'y'") != std::string::npos);
    CHECK(errorOf("x1,x3,y\n1,2,3\n").find("missing column 'x2'") != std::string::npos);
    CHECK(errorOf("x1,y\n1,2\n3,four\n").find("t.csv:3:") != std::string::npos);
    CHECK(errorOf("x1,y\n1,2\n3\n").find("t.csv:3: expected 2 fields") != std::string::npos);
    CHECK(errorOf("x1,y\n1,nan\n").find("non-finite") != std::string::npos);
    CHECK(errorOf("x1,y\n1e999,1\n").find("t.csv:2:") != std::string::npos);
    CHECK(errorOf("").find("no header") != std::string::npos);
    CHECK(errorOf("x1,y\n").find("no data rows") != std::string::npos);
}

TEST_CASE("PGM round trip, comments, rejection") {
    GrayImage img{3, 2, {0, 10, 20, 30, 40, 255}};
    std::ostringstream out;
    writePgm(out, img);
    std::istringstream in(out.str());
    const auto back = readPgm(in);
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.pixels == img.pixels);

    std::string withComment = "P5\n# made by hand\n3 2\n255\n";
    withComment.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    std::istringstream c(withComment);
    CHECK(readPgm(c).pixels == img.pixels);

    std::istringstream ascii("P2\n3 2\n255\n0 1 2 3 4 5\n");
    CHECK_THROWS_WITH_AS(readPgm(ascii), doctest::Contains("P5"), InputError);
    std::istringstream truncated("P5\n3 2\n255\n\x01\x02");
    CHECK_THROWS_AS(readPgm(truncated), InputError);
    std::istringstream deep("P5\n3 2\n65535\n");
    CHECK_THROWS_AS(readPgm(deep), InputError);
}

TEST_CASE("sha256Hex and buildTimestamp") {
    CHECK(sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256Hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    setenv("SOURCE_DATE_EPOCH", "86400", 1);
    CHECK(buildTimestamp() == "1970-01-02T00:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
    CHECK(buildTimestamp() == "1970-01-01T00:00:00Z");
}

TEST_CASE("model document: round trip reproduces predictions bit for bit") {
    Rng rng(80);
    const auto s = randomSample(rng, 4000, 2, -1.0, 1.0,
                                [](auto x) { return std::sin(3 * x[0]) + x[1] * x[1]; }, 0.1, true);
    TreeConfig cfg;
    cfg.select.nMax = 2;
    cfg.stop.maxDepth = 4;
    ModelDocument doc;
    doc.command = "tree";
    doc.config = configJson(cfg);
    doc.tree = growTree(s, cfg);
    doc.provenance = {"sha256:00", "1970-01-01T00:00:00Z", 7};
    REQUIRE(doc.tree.leafCount() > 1);

    const std::string text = serializeModel(doc);
    const ModelDocument back = parseModel(text);
    CHECK(serializeModel(back) == text);
    CHECK(back.provenance.seed == 7);
    CHECK(back.tree.config.select.nMax == 2);
    CHECK(back.tree.config.stop.maxDepth == 4);

    std::vector<double> x(2);
    for (int i = 0; i < 32; ++i) {
        for (int j = 0; j < 32; ++j) {
            x[0] = -1.1 + 2.2 * i / 31.0;
            x[1] = -1.1 + 2.2 * j / 31.0;
            const auto a = predictTree(doc.tree, x);
            const auto b = predictTree(back.tree, x);
            CHECK(a.value == b.value);
            CHECK(a.variance == b.variance);
            CHECK(a.leafId == b.leafId);
            CHECK(a.extrapolated == b.extrapolated);
        }
    }
}

TEST_CASE("model document: rejects malformed input") {
    CHECK_THROWS_AS(parseModel("{"), InputError);
    CHECK_THROWS_AS(parseModel("{}"), InputError);
    const auto s = sample1d({0, 1, 2, 3}, {1, 2, 3, 5});
    ModelDocument doc;
    doc.command = "fit";
    doc.config = nlohmann::json::object();
    doc.tree = singleLeafTree(fitPolynomial(s, 1), s);
    auto j = toJson(doc);
    CHECK_NOTHROW(modelFromJson(j));
    auto wrongVersion = j;
    wrongVersion["version"] = 99;
    CHECK_THROWS_WITH_AS(modelFromJson(wrongVersion), doctest::Contains("version"), InputError);
    auto shortCoeffs = j;
    shortCoeffs["tree"]["nodes"][0]["leaf"]["coeffs"] = {1.0};
    CHECK_THROWS_AS(modelFromJson(shortCoeffs), InputError);
    auto badDim = j;
    badDim["tree"]["dim"] = 2;
    CHECK_THROWS_AS(modelFromJson(badDim), InputError);
}
