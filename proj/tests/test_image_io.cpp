#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "ictac/image_io.hpp"
#include "ictac/masks.hpp"

namespace ictac {
namespace {

namespace fs = std::filesystem;

class ImageIo : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ictac_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const char* name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

TEST_F(ImageIo, SinglePixel) {
    save_image(DenseTensor({1, 1, 3}, 255.0), path("w.png"));
    const auto t = load_image(path("w.png"));
    EXPECT_EQ(t.shape(), (Shape{1, 1, 3}));
    EXPECT_EQ(t.values(), (std::vector<double>{255, 255, 255}));
}

TEST_F(ImageIo, RoundTripKeepsOrientation) {
    DenseTensor t({5, 7, 3});
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 7; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) t(r, c, ch) = double(r * 40 + c * 5 + ch);
    save_image(t, path("rt.png"));
    EXPECT_EQ(load_image(path("rt.png")), t);
}

TEST_F(ImageIo, Quantization) {
    EXPECT_EQ(quantize(255.7), 255);
    EXPECT_EQ(quantize(-3.2), 0);
    EXPECT_EQ(quantize(127.5), 128);
    EXPECT_EQ(quantize(127.49), 127);

    const DenseTensor t(Shape{1, 1, 3}, std::vector<double>{255.7, -3.2, 127.5});
    save_image(t, path("q.png"));
    EXPECT_EQ(load_image(path("q.png")).values(), (std::vector<double>{255, 0, 128}));
}

TEST_F(ImageIo, MaskRoundTrip) {
    const auto m = gen_mask(Shape{6, 9, 3}, 50.0, 2);
    save_mask(m, path("m.png"));
    EXPECT_EQ(load_mask(path("m.png")), m);
    // stored as a grayscale image three planes tall
    EXPECT_THROW(load_image(path("m.png")), IoError);
}

TEST_F(ImageIo, Errors) {
    EXPECT_THROW(load_image(path("missing.png")), IoError);
    save_mask(ObservationMask(Shape{2, 2, 1}, 1), path("g.png"));
    EXPECT_THROW(load_image(path("g.png")), IoError);
    EXPECT_THROW(load_mask(path("g.png"), 3), IoError);
    EXPECT_THROW(save_image(DenseTensor({2, 2}, 0.0), path("x.png")), ShapeError);
    save_image(DenseTensor({2, 2, 3}, 10.0), path("rgb.png"));
    EXPECT_THROW(load_mask(path("rgb.png")), IoError);
}

TEST(Fixtures, LenaShapes) {
    const auto a = load_image(std::string(ICTAC_DATA_DIR) + "/lena_243x512.png");
    EXPECT_EQ(a.shape(), (Shape{243, 512, 3}));
    const auto b = load_image(std::string(ICTAC_DATA_DIR) + "/lena_256x256.png");
    EXPECT_EQ(b.shape(), (Shape{256, 256, 3}));
}

}  // namespace
}  // namespace ictac
