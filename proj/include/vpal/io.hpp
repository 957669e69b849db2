#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpal/signal.hpp"

namespace vpal {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Images are [h, w] (gray) or [3, h, w] (RGB) with values in [0, 1];
// writers clamp to that range. PGM is binary P5, 8 or 16 bit.
GridSignal read_pgm(const std::filesystem::path& path);
GridSignal decode_pgm(std::span<const unsigned char> bytes);
void write_pgm(const std::filesystem::path& path, const GridSignal& image, int bit_depth = 8);

GridSignal read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GridSignal& image, int bit_depth = 8);

// Dispatches on the extension (.pgm or .png).
GridSignal read_image(const std::filesystem::path& path);

// One header line, then the signal row-major: rank-2 signals as a matrix,
// anything else as one value per line.
void write_csv(const std::filesystem::path& path, const GridSignal& signal,
               const std::string& header);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vpal
