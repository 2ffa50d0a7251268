#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "spca/model_synth.hpp"
#include "spca/rng.hpp"

using namespace spca;

TEST(Philox, KnownAnswers)
{
    using C = Philox4x32::counter_type;
    using K = Philox4x32::key_type;
    EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsDiffer)
{
    auto a = make_stream(5, Stream::signal), b = make_stream(5, Stream::noise), c = make_stream(5, Stream::signal);
    int same = 0;
    for (int i = 0; i < 64; ++i) {
        const auto x = a(), y = b();
        EXPECT_EQ(x, c());
        same += x == y;
    }
    EXPECT_LT(same, 2);
}

TEST(DeriveSeed, DocumentedComposition)
{
    EXPECT_EQ(derive_seed(7, 2, 3), mix64(mix64(mix64(7) ^ 2) ^ 3));
    EXPECT_NE(derive_seed(7, 2, 3), derive_seed(7, 3, 2));
    EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafull);
}

TEST(SampleWigner, ZeroSnrIsPureNoise)
{
    const auto a = sample_wigner(30, 0.0, 0.3, 9);
    const auto b = sample_wigner(30, 2.0, 0.3, 9);
    const Eigen::MatrixXd spike = std::sqrt(2.0 / 30.0) * b.x * b.x.transpose();
    EXPECT_EQ(a.x, b.x);
    EXPECT_LE((b.Y - spike - a.Y).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(a.Y, a.Y.transpose());
}

TEST(SampleWigner, Deterministic)
{
    const auto a = sample_wigner(4, 1.0, 0.3, 7);
    const auto b = sample_wigner(4, 1.0, 0.3, 7);
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.Y, a.Y.transpose());
    EXPECT_NE(sample_wigner(4, 1.0, 0.3, 8).Y, a.Y);
}

TEST(SampleWigner, NoiseDoesNotDependOnSparsity)
{
    const auto a = sample_wigner(20, 0.0, 0.1, 3);
    const auto b = sample_wigner(20, 0.0, 0.6, 3);
    EXPECT_EQ(a.Y, b.Y);
}

TEST(SampleWigner, Moments)
{
    const long n = 10000;
    const auto inst = sample_wigner(n, 0.0, 0.3, 4);
    EXPECT_NEAR(inst.x.mean(), 0.3, 5 * std::sqrt(0.21 / n));
    double s = 0, s2 = 0;
    long k = 0;
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) {
            s += inst.Y(i, j);
            s2 += inst.Y(i, j) * inst.Y(i, j);
            ++k;
        }
    const double var = s2 / k - (s / k) * (s / k);
    EXPECT_NEAR(var, 1.0, 0.05);
    EXPECT_NEAR(inst.Y.diagonal().squaredNorm() / n, 1.0, 0.1);
}

TEST(SampleWishart, ZeroSnrAndDeterminism)
{
    const auto a = sample_wishart(3, 5, 1.0, 0.3, 1);
    const auto b = sample_wishart(3, 5, 1.0, 0.3, 1);
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.v, b.v);
    const auto z = sample_wishart(3, 5, 0.0, 0.3, 1);
    const Eigen::MatrixXd spike = std::sqrt(1.0 / 5.0) * a.u * a.v.transpose();
    EXPECT_LE((a.Y - spike - z.Y).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_DOUBLE_EQ(a.alpha(), 0.6);
}

TEST(SampleWishart, Moments)
{
    const long n = 10000;
    const auto inst = sample_wishart(n, n, 0.0, 0.3, 2);
    EXPECT_NEAR(inst.u.squaredNorm() / n, 1.0, 0.05);
    EXPECT_NEAR(inst.v.mean(), 0.3, 5 * std::sqrt(0.21 / n));
    EXPECT_NEAR(inst.Y.squaredNorm() / (double(n) * n), 1.0, 0.01);
}

TEST(SampleErrors, InvalidParameters)
{
    EXPECT_THROW(sample_wigner(0, 1.0, 0.3, 1), ParameterError);
    EXPECT_THROW(sample_wigner(4, -1.0, 0.3, 1), ParameterError);
    EXPECT_THROW(sample_wigner(4, 1.0, 1.0, 1), ParameterError);
    EXPECT_THROW(sample_wishart(0, 4, 1.0, 0.3, 1), ParameterError);
}

class InstanceDump : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "spca_dump_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(InstanceDump, WignerRoundTrip)
{
    const auto inst = sample_wigner(7, 1.25, 0.3, 42);
    const auto path = (dir / "w.bin").string();
    write_instance(path, inst);
    const auto back = read_wigner_instance(path);
    EXPECT_EQ(back.Y, inst.Y);
    EXPECT_EQ(back.x, inst.x);
    EXPECT_EQ(back.lambda, 1.25);
    EXPECT_EQ(back.epsilon, 0.3);
    EXPECT_EQ(back.seed, 42u);
}

TEST_F(InstanceDump, LayoutIsRowMajorLittleEndian)
{
    const auto inst = sample_wishart(2, 3, 0.5, 0.3, 5);
    const auto path = (dir / "r.bin").string();
    write_instance(path, inst);
    std::ifstream is(path, std::ios::binary);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header.rfind("SPCA-INSTANCE 1 model=wishart m=2 n=3 ", 0), 0u);
    for (long i = 0; i < 2; ++i)
        for (long j = 0; j < 3; ++j) {
            unsigned char b[8];
            is.read(reinterpret_cast<char*>(b), 8);
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= std::uint64_t{b[k]} << (8 * k);
            EXPECT_EQ(std::bit_cast<double>(bits), inst.Y(i, j));
        }
    EXPECT_EQ(is.peek(), std::char_traits<char>::eof());

    const auto back = read_wishart_instance(path);
    EXPECT_EQ(back.u, inst.u);
    EXPECT_EQ(back.v, inst.v);
    EXPECT_THROW(read_wigner_instance(path), ParameterError);
}

TEST_F(InstanceDump, TruncatedFileIsRejected)
{
    const auto inst = sample_wigner(5, 1.0, 0.3, 1);
    const auto path = (dir / "t.bin").string();
    write_instance(path, inst);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    EXPECT_THROW(read_wigner_instance(path), ParameterError);
}
