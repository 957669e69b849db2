#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "vpal/io.hpp"

using namespace vpal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vpal_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Random image on the quantization grid of the given depth.
GridSignal grid_image(const Shape& shape, unsigned maxval, std::mt19937_64& rng) {
  std::uniform_int_distribution<unsigned> level(0, maxval);
  GridSignal s(shape);
  for (double& v : s.data) v = double(level(rng)) / maxval;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("PGM round trips") {
  TempDir dir;
  std::mt19937_64 rng(5);
  for (int depth : {8, 16}) {
    const unsigned maxval = depth == 8 ? 255 : 65535;
    const GridSignal img = grid_image({7, 11}, maxval, rng);
    const fs::path p = dir.path / ("a" + std::to_string(depth) + ".pgm");
    write_pgm(p, img, depth);
    const GridSignal back = read_pgm(p);
    CHECK(back.shape == img.shape);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == doctest::Approx(img[i]).epsilon(1e-15));
    CHECK(read_image(p).data == back.data);
  }
  // out-of-range values are clamped
  const fs::path p = dir.path / "clamp.pgm";
  write_pgm(p, GridSignal({1, 3}, {-0.5, 0.5, 1.5}));
  const GridSignal c = read_pgm(p);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(128.0 / 255.0));
  CHECK(c[2] == 1.0);
  CHECK_THROWS_AS(write_pgm(p, GridSignal({3, 2, 2})), ShapeError);
  CHECK_THROWS(write_pgm(p, GridSignal({2, 2}), 12));
}

TEST_CASE("PGM decoding") {
  const std::string text = "P5\n# a comment\n3 2\n# another\n255\n";
  std::vector<unsigned char> bytes(text.begin(), text.end());
  for (unsigned char v : {0, 51, 102, 153, 204, 255}) bytes.push_back(v);
  const GridSignal img = decode_pgm(bytes);
  CHECK(img.shape == Shape{2, 3});
  CHECK(img[1] == doctest::Approx(0.2));
  CHECK(img[5] == 1.0);

  const std::string wide = "P5 2 1 1000\n";
  std::vector<unsigned char> w(wide.begin(), wide.end());
  for (unsigned char v : {0x01, 0xF4, 0x03, 0xE8}) w.push_back(v);  // 500, 1000
  const GridSignal img16 = decode_pgm(w);
  CHECK(img16[0] == doctest::Approx(0.5));
  CHECK(img16[1] == 1.0);

  auto bad = [](const std::string& s) {
    std::vector<unsigned char> b(s.begin(), s.end());
    return b;
  };
  CHECK_THROWS_AS(decode_pgm(bad("P2\n2 2\n255\n0 0 0 0")), IoError);
  CHECK_THROWS_AS(decode_pgm(bad("P5\n2 2\n255\n\x01")), IoError);
  CHECK_THROWS_AS(decode_pgm(bad("P5\n0 2\n255\n")), IoError);
  CHECK_THROWS_AS(decode_pgm(bad("P5\n1 1\n70000\n\x01\x01")), IoError);
  CHECK_THROWS_AS(read_pgm("/nonexistent/x.pgm"), IoError);
}

TEST_CASE("PNG round trips") {
  TempDir dir;
  std::mt19937_64 rng(9);
  for (int depth : {8, 16}) {
    const unsigned maxval = depth == 8 ? 255 : 65535;
    for (const Shape& shape : {Shape{5, 9}, Shape{3, 4, 6}}) {
      const GridSignal img = grid_image(shape, maxval, rng);
      const fs::path p = dir.path / ("img" + std::to_string(depth) + "_" + std::to_string(shape.size()) + ".png");
      write_png(p, img, depth);
      const GridSignal back = read_image(p);
      CHECK(back.shape == img.shape);
      double err = 0.0;
      for (std::size_t i = 0; i < img.size(); ++i) err = std::max(err, std::abs(back[i] - img[i]));
      CHECK(err < 1e-12);
    }
  }
  CHECK_THROWS_AS(read_png(dir.path / "missing.png"), IoError);
  std::ofstream(dir.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(read_png(dir.path / "junk.png"), IoError);
  CHECK_THROWS_AS(read_image(dir.path / "x.bmp"), IoError);
}

TEST_CASE("CSV output") {
  TempDir dir;
  write_csv(dir.path / "m.csv", GridSignal({2, 3}, {1, 2, 3, 4, 5, 0.5}), "x");
  CHECK(slurp(dir.path / "m.csv") == "x\n1,2,3\n4,5,0.5\n");
  write_csv(dir.path / "v.csv", testing::vec({0.1, -2}), "value");
  CHECK(slurp(dir.path / "v.csv") == "value\n0.10000000000000001\n-2\n");
  write_text(dir.path / "t.txt", "hello\n");
  CHECK(slurp(dir.path / "t.txt") == "hello\n");
  CHECK_THROWS_AS(write_text(dir.path / "no" / "such" / "t.txt", "x"), IoError);
}
