#include <doctest.h>

#include <stdexcept>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ood/dataset.hpp"
#include "ood/errors.hpp"
#include "test_util.hpp"

using namespace ood;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p, const std::string& bytes) : path(std::move(p)) {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    ~TempFile() { std::remove(path.c_str()); }
};

void put_u32_be(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>((v >> 24) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>(v & 0xff));
}

std::string idx_images(const std::vector<std::vector<std::uint8_t>>& images,
                       std::uint32_t rows, std::uint32_t cols) {
    std::string s;
    put_u32_be(s, 0x803);
    put_u32_be(s, static_cast<std::uint32_t>(images.size()));
    put_u32_be(s, rows);
    put_u32_be(s, cols);
    for (const auto& img : images)
        for (std::uint8_t b : img) s.push_back(static_cast<char>(b));
    return s;
}

std::string idx_labels(const std::vector<std::uint8_t>& labels) {
    std::string s;
    put_u32_be(s, 0x801);
    put_u32_be(s, static_cast<std::uint32_t>(labels.size()));
    for (std::uint8_t b : labels) s.push_back(static_cast<char>(b));
    return s;
}

} // namespace

TEST_CASE("load_csv_dataset") {
    SUBCASE("parses a well-formed file") {
        TempFile f("ds_ok.csv",
                   "label,f0,f1\n"
                   "0,1.5,-2.0\n"
                   "1,0.25,3.0\n"
                   "0,-1.0,0.0\n");
        const auto ds = load_csv_dataset(f.path);
        REQUIRE(ds.size() == 3);
        CHECK(ds.dim() == 2);
        CHECK(ds.labels == std::vector<int>{0, 1, 0});
        CHECK(ds.inputs[0] == std::vector<double>{1.5, -2.0});
        CHECK(ds.inputs[1] == std::vector<double>{0.25, 3.0});
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv_dataset("no_such_file.csv"), DataError);
    }
    SUBCASE("ragged row reported with its line number") {
        TempFile f("ds_ragged.csv", "label,f0,f1\n0,1.0,2.0\n1,3.0\n");
        try {
            load_csv_dataset(f.path);
            CHECK(false);
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("3") != std::string::npos);
        }
    }
    SUBCASE("non-numeric feature rejected") {
        TempFile f("ds_alpha.csv", "label,f0\n0,abc\n");
        CHECK_THROWS_AS(load_csv_dataset(f.path), DataError);
    }
    SUBCASE("negative label rejected") {
        TempFile f("ds_neg.csv", "label,f0\n-1,0.5\n");
        CHECK_THROWS_AS(load_csv_dataset(f.path), DataError);
    }
}

TEST_CASE("load_idx_dataset") {
    const std::vector<std::vector<std::uint8_t>> images = {
        {0, 51, 102, 255}, {255, 204, 153, 0}, {1, 2, 3, 4}};
    TempFile imgs("t10k-images-idx3-ubyte", idx_images(images, 2, 2));
    TempFile lbls("t10k-labels-idx1-ubyte", idx_labels({7, 0, 3}));

    SUBCASE("pixel scaling and labels") {
        const auto ds = load_idx_dataset(imgs.path, lbls.path);
        REQUIRE(ds.size() == 3);
        CHECK(ds.dim() == 4);
        CHECK(ds.labels == std::vector<int>{7, 0, 3});
        CHECK(ds.inputs[0][0] == doctest::Approx(0.0));
        CHECK(ds.inputs[0][1] == doctest::Approx(51.0 / 255.0));
        CHECK(ds.inputs[0][3] == doctest::Approx(1.0));
        CHECK(ds.inputs[2][2] == doctest::Approx(3.0 / 255.0));
    }
    SUBCASE("labels path convention") {
        CHECK(idx_labels_path_for("t10k-images-idx3-ubyte") == "t10k-labels-idx1-ubyte");
        CHECK(idx_labels_path_for("/data/train-images-idx3-ubyte") ==
              "/data/train-labels-idx1-ubyte");
    }
    SUBCASE("count mismatch rejected") {
        TempFile short_lbls("short-labels-idx1-ubyte", idx_labels({7, 0}));
        CHECK_THROWS_AS(load_idx_dataset(imgs.path, short_lbls.path), DataError);
    }
    SUBCASE("bad magic rejected") {
        std::string bad = idx_images(images, 2, 2);
        bad[3] = 0x01;  // corrupt the magic number
        TempFile f("bad-images-idx3-ubyte", bad);
        CHECK_THROWS_AS(load_idx_dataset(f.path, lbls.path), DataError);
    }
    SUBCASE("truncated payload rejected") {
        std::string trunc = idx_images(images, 2, 2);
        trunc.resize(trunc.size() - 2);
        TempFile f("trunc-images-idx3-ubyte", trunc);
        CHECK_THROWS_AS(load_idx_dataset(f.path, lbls.path), DataError);
    }
}

TEST_CASE("balanced_subsample") {
    // 3 classes with plenty of rows each.
    const auto ds = testutil::make_blobs({{0.0}, {10.0}, {20.0}}, 50, 0.1, 31);

    SUBCASE("floor share per class, remainder to the lowest ids") {
        const auto sub = balanced_subsample(ds, 10, 1);
        REQUIRE(sub.size() == 10);
        std::map<int, int> counts;
        for (int label : sub.labels) ++counts[label];
        // 10 = 3*3 + 1 extra for class 0.
        CHECK(counts[0] == 4);
        CHECK(counts[1] == 3);
        CHECK(counts[2] == 3);
    }
    SUBCASE("exactly divisible request is exactly balanced") {
        const auto sub = balanced_subsample(ds, 9, 2);
        std::map<int, int> counts;
        for (int label : sub.labels) ++counts[label];
        for (int c = 0; c < 3; ++c) CHECK(counts[c] == 3);
    }
    SUBCASE("deterministic under fixed seed, varies across seeds") {
        const auto a = balanced_subsample(ds, 12, 5);
        const auto b = balanced_subsample(ds, 12, 5);
        const auto c = balanced_subsample(ds, 12, 6);
        CHECK(a.inputs == b.inputs);
        CHECK(a.labels == b.labels);
        CHECK(a.inputs != c.inputs);
    }
    SUBCASE("rows are drawn from the source without fabrication") {
        const auto sub = balanced_subsample(ds, 15, 7);
        std::set<std::vector<double>> source(ds.inputs.begin(), ds.inputs.end());
        for (const auto& x : sub.inputs) CHECK(source.count(x) == 1);
    }
    SUBCASE("class shortfall throws InsufficientClassSamples") {
        // class 2 has only 2 rows but the request needs 4 per class.
        LabeledDataset small = testutil::make_blobs({{0.0}, {10.0}}, 10, 0.1, 8);
        small.inputs.push_back({20.0});
        small.labels.push_back(2);
        small.inputs.push_back({20.1});
        small.labels.push_back(2);
        try {
            balanced_subsample(small, 12, 1);
            CHECK(false);
        } catch (const InsufficientClassSamples& e) {
            CHECK(e.class_id == 2);
        }
    }
}

TEST_CASE("random_subsample") {
    const auto ds = testutil::make_blobs({{0.0}, {5.0}}, 20, 0.1, 41);

    SUBCASE("size and determinism") {
        const auto a = random_subsample(ds, 10, 3);
        const auto b = random_subsample(ds, 10, 3);
        CHECK(a.size() == 10);
        CHECK(a.inputs == b.inputs);
        CHECK(a.labels == b.labels);
    }
    SUBCASE("request larger than the dataset clamps") {
        const auto sub = random_subsample(ds, 1000, 3);
        CHECK(sub.size() == ds.size());
    }
    SUBCASE("no replacement") {
        const auto sub = random_subsample(ds, 40, 9);
        std::multiset<std::vector<double>> all(ds.inputs.begin(), ds.inputs.end());
        std::multiset<std::vector<double>> got(sub.inputs.begin(), sub.inputs.end());
        CHECK(all == got);
    }
}

TEST_CASE("LabeledDataset validation and select") {
    LabeledDataset ds;
    ds.inputs = {{0.0, 1.0}, {2.0, 3.0}, {4.0, 5.0}};
    ds.labels = {0, 1, 0};

    SUBCASE("valid dataset passes") {
        CHECK_NOTHROW(ds.validate(2));
        CHECK(ds.max_label() == 1);
    }
    SUBCASE("label out of range") {
        CHECK_THROWS_AS(ds.validate(1), std::invalid_argument);
    }
    SUBCASE("ragged inputs rejected") {
        auto bad = ds;
        bad.inputs[1] = {2.0};
        CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
    }
    SUBCASE("non-finite feature rejected") {
        auto bad = ds;
        bad.inputs[0][0] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
    }
    SUBCASE("select keeps row alignment") {
        const auto sel = ds.select({2, 0});
        REQUIRE(sel.size() == 2);
        CHECK(sel.inputs[0] == std::vector<double>{4.0, 5.0});
        CHECK(sel.labels[0] == 0);
        CHECK(sel.inputs[1] == std::vector<double>{0.0, 1.0});
    }
}

TEST_CASE("parse_format") {
    CHECK(parse_format("csv") == DataFormat::Csv);
    CHECK(parse_format("idx") == DataFormat::Idx);
    CHECK_THROWS_AS(parse_format("parquet"), ConfigError);
}
