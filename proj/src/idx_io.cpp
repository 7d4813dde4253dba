// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/idx_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "zdda/errors.hpp"

namespace zdda {
namespace {

// gzread handles both gzip-compressed and plain files transparently.
class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path)
      : path_(path.string()), f_(gzopen(path_.c_str(), "rb")) {
    if (!f_) throw FormatError("cannot open " + path_);
  }
  ~GzReader() {
    if (f_) gzclose(f_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t len) {
    auto* p = static_cast<char*>(dst);
    while (len > 0) {
      const unsigned chunk =
          static_cast<unsigned>(std::min<std::size_t>(len, 1u << 30));
      const int got = gzread(f_, p, chunk);
      if (got <= 0) throw FormatError(path_ + ": truncated IDX payload");
      p += got;
      len -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_u32be() {
    std::uint8_t b[4];
    read(b, 4);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
  }

 private:
  std::string path_;
  gzFile f_;
};

class GzWriter {
 public:
  GzWriter(const std::filesystem::path& path, bool compress)
      : path_(path.string()),
        f_(gzopen(path_.c_str(), compress ? "wb6" : "wbT")) {
    if (!f_) throw FormatError("cannot create " + path_);
  }
  ~GzWriter() {
    if (f_) gzclose(f_);
  }
  GzWriter(const GzWriter&) = delete;
  GzWriter& operator=(const GzWriter&) = delete;

  void write(const void* src, std::size_t len) {
    if (gzwrite(f_, src, static_cast<unsigned>(len)) !=
        static_cast<int>(len))
      throw FormatError(path_ + ": short write");
  }

  void write_u32be(std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 8), std::uint8_t(v)};
    write(b, 4);
  }

 private:
  std::string path_;
  gzFile f_;
};

bool wants_gzip(const std::filesystem::path& p) {
  return p.extension() == ".gz";
}

}  // namespace

IdxImages load_idx_images(const std::filesystem::path& path) {
  GzReader in(path);
  const std::uint32_t magic = in.read_u32be();
  if (magic != 0x00000803u && magic != 0x00000804u)
    throw FormatError(path.string() + ": bad IDX image magic");
  IdxImages out;
  out.count = static_cast<Eigen::Index>(in.read_u32be());
  out.shape.height = static_cast<int>(in.read_u32be());
  out.shape.width = static_cast<int>(in.read_u32be());
  out.shape.channels = magic == 0x00000804u ? static_cast<int>(in.read_u32be()) : 1;
  out.shape.validate();
  out.bytes.resize(static_cast<std::size_t>(out.count) *
                   static_cast<std::size_t>(out.shape.pixels()));
  in.read(out.bytes.data(), out.bytes.size());
  return out;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  GzReader in(path);
  if (in.read_u32be() != 0x00000801u)
    throw FormatError(path.string() + ": bad IDX label magic");
  const auto n = in.read_u32be();
  std::vector<std::uint8_t> raw(n);
  if (n > 0) in.read(raw.data(), raw.size());
  return std::vector<int>(raw.begin(), raw.end());
}

LabeledDataset<float> load_idx_dataset(
    const std::filesystem::path& images_path,
    const std::filesystem::path& labels_path, const std::string& name,
    int class_count) {
  const IdxImages raw = load_idx_images(images_path);
  const std::vector<int> labels = load_idx_labels(labels_path);
  if (static_cast<Eigen::Index>(labels.size()) != raw.count)
    throw ConsistencyError(images_path.string() +
                           ": image/label count mismatch");

  LabeledDataset<float> ds;
  ds.name = name.empty() ? images_path.stem().string() : name;
  ds.shape = raw.shape;
  ds.labels = labels;
  ds.class_count = class_count;
  if (ds.class_count < 0) {
    int max_label = -1;
    for (int l : labels) max_label = std::max(max_label, l);
    ds.class_count = max_label + 1;
  }

  const Eigen::Index pixels = raw.shape.pixels();
  ds.images.resize(pixels, raw.count);
  constexpr float kScale = 1.0f / 255.0f;
  // IDX stores images row-major per image; within a 4-dim file the last
  // dimension is the channel, so interleaved (y, x, c) becomes plane-major.
  if (raw.shape.channels == 1) {
    for (Eigen::Index i = 0; i < raw.count; ++i) {
      const std::uint8_t* src = raw.bytes.data() + i * pixels;
      float* dst = ds.images.col(i).data();
      for (Eigen::Index p = 0; p < pixels; ++p) dst[p] = kScale * src[p];
    }
  } else {
    const int plane = raw.shape.plane();
    const int ch = raw.shape.channels;
    for (Eigen::Index i = 0; i < raw.count; ++i) {
      const std::uint8_t* src = raw.bytes.data() + i * pixels;
      float* dst = ds.images.col(i).data();
      for (int p = 0; p < plane; ++p)
        for (int c = 0; c < ch; ++c) dst[c * plane + p] = kScale * src[p * ch + c];
    }
  }
  ds.validate();
  return ds;
}

void save_idx_dataset(const LabeledDataset<float>& ds,
                      const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
  ds.validate();
  const auto quantize = [](float v) {
    return static_cast<std::uint8_t>(
        std::clamp<int>(static_cast<int>(std::lround(v * 255.0f)), 0, 255));
  };

  {
    GzWriter out(images_path, wants_gzip(images_path));
    const bool color = ds.shape.channels != 1;
    out.write_u32be(color ? 0x00000804u : 0x00000803u);
    out.write_u32be(static_cast<std::uint32_t>(ds.size()));
    out.write_u32be(static_cast<std::uint32_t>(ds.shape.height));
    out.write_u32be(static_cast<std::uint32_t>(ds.shape.width));
    if (color) out.write_u32be(static_cast<std::uint32_t>(ds.shape.channels));

    std::vector<std::uint8_t> buf(ds.shape.pixels());
    const int plane = ds.shape.plane();
    const int ch = ds.shape.channels;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      const float* src = ds.images.col(i).data();
      if (!color) {
        for (int p = 0; p < plane; ++p) buf[p] = quantize(src[p]);
      } else {
        for (int p = 0; p < plane; ++p)
          for (int c = 0; c < ch; ++c) buf[p * ch + c] = quantize(src[c * plane + p]);
      }
      out.write(buf.data(), buf.size());
    }
  }
  {
    GzWriter out(labels_path, wants_gzip(labels_path));
    out.write_u32be(0x00000801u);
    out.write_u32be(static_cast<std::uint32_t>(ds.size()));
    std::vector<std::uint8_t> raw(ds.labels.begin(), ds.labels.end());
    if (!raw.empty()) out.write(raw.data(), raw.size());
  }
}

}  // namespace zdda
