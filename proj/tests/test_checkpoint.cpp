#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <sstream>

#include "jmpgcf/checkpoint.hpp"
#include "oracles.hpp"

using namespace jmpgcf;

namespace {

ModelParameters sample_params() {
    auto p = init_parameters(2, 3, 4, PopularityConfig::with_uniform_weights(0.1, 2), 77);
    p.base[1](0, 0) = -0.0;
    p.base[1](0, 1) = std::numeric_limits<double>::denorm_min();
    p.base[2](4, 3) = 1e300;
    return p;
}

bool bitwise_equal(const ModelParameters& a, const ModelParameters& b) {
    if (a.base.size() != b.base.size()) return false;
    for (std::size_t t = 0; t < a.base.size(); ++t) {
        const auto x = a.base[t].values();
        const auto y = b.base[t].values();
        if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size_bytes()) != 0) return false;
    }
    return true;
}

}  // namespace

TEST(Checkpoint, HeaderLayout) {
    std::ostringstream os;
    write_checkpoint(os, sample_params(), {{3, 4}, 1, 300});
    const std::string bytes = os.str();
    const auto newline = bytes.find('\n');
    EXPECT_EQ(bytes.substr(0, newline), "JMPGCF1 2 3 4 2 0.10000000000000001 3 4 1 300");
    EXPECT_EQ(bytes.size() - newline - 1, 3u * 5u * 4u * 8u);
    // little-endian: 1.0 is 00 00 00 00 00 00 f0 3f
    auto p = sample_params();
    p.base[0](0, 0) = 1.0;
    std::ostringstream one;
    write_checkpoint(one, p, {{1, 2}, 0, 0});
    const std::string s = one.str();
    const auto payload = s.substr(s.find('\n') + 1, 8);
    EXPECT_EQ(payload, std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST(Checkpoint, BitExactRoundTrip) {
    oracle::TempDir dir;
    const auto p = sample_params();
    const CheckpointMeta meta{{3, 4}, 2, 450};
    save_checkpoint(dir.path / "model.bin", p, meta);
    const auto ck = load_checkpoint(dir.path / "model.bin");
    EXPECT_TRUE(bitwise_equal(ck.params, p));
    EXPECT_EQ(ck.params, p);
    EXPECT_EQ(ck.meta, meta);
    EXPECT_EQ(ck.params.popularity.unit, 0.1);
    EXPECT_EQ(ck.params.popularity.granularity_weights, (std::vector<double>{1, 1, 1}));
    EXPECT_FALSE(std::filesystem::exists(dir.path / "model.bin.tmp"));
}

TEST(Checkpoint, RejectsCorruption) {
    std::ostringstream os;
    write_checkpoint(os, sample_params(), {{1, 2}, 1, 1});
    const std::string good = os.str();

    auto read = [](const std::string& s) {
        std::istringstream in(s);
        return read_checkpoint(in);
    };
    EXPECT_NO_THROW(read(good));

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(read(bad_magic), FormatError);
    EXPECT_THROW(read(good.substr(0, good.size() - 3)), FormatError);
    EXPECT_THROW(read(good + "x"), FormatError);
    EXPECT_THROW(read(""), FormatError);
    EXPECT_THROW(read("JMPGCF1 2 3\n"), FormatError);
}

TEST(Checkpoint, MissingFile) {
    EXPECT_THROW(load_checkpoint("/nonexistent/checkpoint.bin"), Error);
}
