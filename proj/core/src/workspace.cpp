#include "topicap/workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include <openssl/evp.h>

#include "topicap/errors.hpp"

namespace topicap {

namespace {

std::mutex hook_mutex;
WriteFaultHook fault_hook;

WriteFaultHook current_hook() {
  std::lock_guard lock(hook_mutex);
  return fault_hook;
}

[[noreturn]] void fail_io(const std::string& what, const fs::path& path) {
  throw DataError(what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, const char* data, std::size_t size, const fs::path& path) {
  while (size > 0) {
    const ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_io("cannot write", path);
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

}  // namespace

std::string serialize(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void set_write_fault_hook(WriteFaultHook hook) {
  std::lock_guard lock(hook_mutex);
  fault_hook = std::move(hook);
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path temp = path;
  temp += ".tmp." + std::to_string(::getpid());
  const int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) fail_io("cannot create", temp);
  try {
    const std::size_t half = bytes.size() / 2;
    write_all(fd, bytes.data(), half, temp);
    if (auto hook = current_hook()) hook(path);
    write_all(fd, bytes.data() + half, bytes.size() - half, temp);
    if (::fsync(fd) != 0) fail_io("cannot sync", temp);
  } catch (...) {
    ::close(fd);
    std::error_code ignored;
    fs::remove(temp, ignored);
    throw;
  }
  if (::close(fd) != 0) fail_io("cannot close", temp);
  if (std::rename(temp.c_str(), path.c_str()) != 0) {
    std::error_code ignored;
    fs::remove(temp, ignored);
    fail_io("cannot rename onto", path);
  }
}

void write_json_atomic(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, serialize(j)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string snapshot_id(const CaptionModel& model) { return sha256_hex(serialize(to_json(model))); }

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

fs::path Workspace::checkpoint(const std::string& variant, std::uint64_t seed) const {
  return root_ / "checkpoints" / ("ckpt_" + variant + "_s" + std::to_string(seed) + ".json");
}

fs::path Workspace::map(const std::string& variant, std::uint64_t seed) const {
  return root_ / "maps" / ("map_" + variant + "_s" + std::to_string(seed) + ".json");
}

fs::path Workspace::report(const std::string& name) const { return root_ / "reports" / (name + ".json"); }

fs::path Workspace::refinement_snapshot(const std::string& snapshot) const {
  return root_ / "refinements" / (snapshot + ".json");
}

void Workspace::create_layout() const {
  for (const char* dir : {"checkpoints", "maps", "reports", "refinements"}) fs::create_directories(root_ / dir);
}

Dataset load_dataset(const fs::path& path) { return dataset_from_json(read_json(path)); }
TopicModel load_lda(const fs::path& path) { return topic_model_from_json(read_json(path)); }
CaptionModel load_checkpoint(const fs::path& path) { return model_from_json(read_json(path)); }

TopicVectorMap topic_bits(const std::vector<std::pair<std::string, TopicVector>>& vectors) {
  TopicVectorMap out;
  for (const auto& [id, tv] : vectors) out[id] = tv.bits;
  return out;
}

TopicVectorMap infer_topic_bits(const TopicModel& lda, const Dataset& dataset) {
  return topic_bits(topic_vectors(lda, dataset, {}, lda.seed));
}

}  // namespace topicap
