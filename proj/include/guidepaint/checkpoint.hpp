#ifndef GUIDEPAINT_CHECKPOINT_HPP_
#define GUIDEPAINT_CHECKPOINT_HPP_

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidepaint/layers.hpp"

namespace guidepaint {

// Named-tensor archive (.nta). Byte layout (all integers little-endian,
// documented in docs/formats.md):
//
//   magic   8 bytes  "GPNTAR1\n"
//   version u32      = 1
//   meta    u32 len + UTF-8 JSON
//   count   u32
//   tensor* count times:
//     name  u32 len + bytes
//     rank  u32
//     dims  i64 * rank
//     data  float32 * prod(dims)
//   crc32   u32 of every preceding byte
//
// Tensors are written sorted by name, so archives are byte-reproducible.
class TensorArchive {
 public:
  static constexpr char kMagic[8] = {'G', 'P', 'N', 'T', 'A', 'R', '1', '\n'};
  static constexpr uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  size_t tensor_count() const { return tensors_.size(); }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  template <typename S>
  void put(const std::string& name, const TensorT<S>& t) {
    tensors_[name] = t.template cast<float>();
  }

  template <typename S = float>
  TensorT<S> get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end())
      throw IoError("archive is missing tensor '" + name + "'");
    return it->second.cast<S>();
  }

  template <typename S>
  TensorT<S> get_checked(const std::string& name, const Shape& expected) const {
    TensorT<S> t = get<S>(name);
    if (t.shape() != expected)
      throw IoError("tensor '" + name + "' shape mismatch: expected " +
                    shape_str(expected) + ", found " + shape_str(t.shape()));
    return t;
  }

  template <typename S>
  void put_params(const std::string& prefix, const std::vector<Param<S>*>& params) {
    for (const Param<S>* p : params) put(prefix + p->name, p->value);
  }

  template <typename S>
  void load_params(const std::string& prefix, const std::vector<Param<S>*>& params) const {
    for (Param<S>* p : params)
      p->value = get_checked<S>(prefix + p->name, p->value.shape());
  }

  void save(const std::string& path) const {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 8);
    append_u32(buf, kVersion);
    std::string meta_str = meta.dump();
    append_u32(buf, static_cast<uint32_t>(meta_str.size()));
    buf.insert(buf.end(), meta_str.begin(), meta_str.end());
    append_u32(buf, static_cast<uint32_t>(tensors_.size()));
    for (const auto& [name, t] : tensors_) {
      append_u32(buf, static_cast<uint32_t>(name.size()));
      buf.insert(buf.end(), name.begin(), name.end());
      append_u32(buf, static_cast<uint32_t>(t.rank()));
      for (int64_t d : t.shape()) append_i64(buf, d);
      size_t off = buf.size();
      buf.resize(off + static_cast<size_t>(t.numel()) * 4);
      std::memcpy(buf.data() + off, t.data(), static_cast<size_t>(t.numel()) * 4);
    }
    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
    append_u32(buf, crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
  }

  static TensorArchive load(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> buf(static_cast<size_t>(size));
    if (!in.read(reinterpret_cast<char*>(buf.data()), size))
      throw IoError("read failed for '" + path + "'");
    Reader r{buf.data(), buf.size(), 0, path};
    if (buf.size() < 16 + 4) throw IoError("corrupt archive '" + path + "': truncated");
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
      throw IoError("'" + path + "' is not a named-tensor archive (bad magic)");
    uint32_t stored_crc = read_u32_at(buf.data() + buf.size() - 4);
    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, buf.data(), static_cast<uInt>(buf.size() - 4)));
    if (crc != stored_crc)
      throw IoError("corrupt archive '" + path + "': checksum mismatch");
    r.pos = 8;
    r.limit = buf.size() - 4;
    uint32_t version = r.u32();
    if (version != kVersion)
      throw IoError("archive '" + path + "' has unsupported version " +
                    std::to_string(version));
    TensorArchive a;
    uint32_t meta_len = r.u32();
    a.meta = nlohmann::json::parse(r.bytes(meta_len), nullptr, false);
    if (a.meta.is_discarded())
      throw IoError("corrupt archive '" + path + "': bad metadata JSON");
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
      uint32_t name_len = r.u32();
      std::string name = r.bytes(name_len);
      uint32_t rank = r.u32();
      if (rank > 8) throw IoError("corrupt archive '" + path + "': bad tensor rank");
      Shape shape(rank);
      for (uint32_t d = 0; d < rank; ++d) shape[d] = r.i64();
      int64_t numel = shape_numel(shape);
      if (numel < 0) throw IoError("corrupt archive '" + path + "': bad dims");
      Tensor t(shape);
      std::string data = r.bytes(static_cast<size_t>(numel) * 4);
      std::memcpy(t.data(), data.data(), data.size());
      a.tensors_[name] = std::move(t);
    }
    return a;
  }

 private:
  struct Reader {
    const unsigned char* data;
    size_t limit;
    size_t pos;
    std::string path;

    void need(size_t n) {
      if (pos + n > limit)
        throw IoError("corrupt archive '" + path + "': truncated record");
    }
    uint32_t u32() {
      need(4);
      uint32_t v = read_u32_at(data + pos);
      pos += 4;
      return v;
    }
    int64_t i64() {
      need(8);
      uint64_t v = 0;
      for (int i = 7; i >= 0; --i) v = (v << 8) | data[pos + static_cast<size_t>(i)];
      pos += 8;
      return static_cast<int64_t>(v);
    }
    std::string bytes(size_t n) {
      need(n);
      std::string s(reinterpret_cast<const char*>(data + pos), n);
      pos += n;
      return s;
    }
  };

  static uint32_t read_u32_at(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  }
  static void append_u32(std::vector<unsigned char>& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  static void append_i64(std::vector<unsigned char>& buf, int64_t sv) {
    uint64_t v = static_cast<uint64_t>(sv);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }

  std::map<std::string, Tensor> tensors_;
};

}  // namespace guidepaint

#endif  // GUIDEPAINT_CHECKPOINT_HPP_
