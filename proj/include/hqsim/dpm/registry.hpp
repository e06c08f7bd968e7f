#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "hqsim/dpm/frame.hpp"
#include "hqsim/dpm/session.hpp"

namespace hqsim::dpm {

class DuplicateName : public DpmError {
 public:
  using DpmError::DpmError;
};

/// Lookup of a name nobody has published (yet). Retryable.
class NameNotFound : public DpmError {
 public:
  using DpmError::DpmError;
};

/// Service name -> port binding.
class NameRegistry {
 public:
  virtual ~NameRegistry() = default;
  virtual void publish(const std::string& name, const std::string& port) = 0;
  virtual std::optional<std::string> try_lookup(const std::string& name) = 0;
  virtual void unpublish(const std::string& name) = 0;

  std::string lookup(const std::string& name) {
    if (auto p = try_lookup(name)) return *p;
    throw NameNotFound("name '" + name + "' is not published");
  }
};

class InMemoryRegistry final : public NameRegistry {
 public:
  void publish(const std::string& name, const std::string& port) override {
    std::lock_guard lk(mu_);
    if (!names_.emplace(name, port).second)
      throw DuplicateName("name '" + name + "' is already published");
  }
  std::optional<std::string> try_lookup(const std::string& name) override {
    std::lock_guard lk(mu_);
    auto it = names_.find(name);
    if (it == names_.end()) return std::nullopt;
    return it->second;
  }
  void unpublish(const std::string& name) override {
    std::lock_guard lk(mu_);
    names_.erase(name);
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::string> names_;
};

/// One file per published name inside a shared directory, holding an encoded
/// Publish frame ("<name>\n<port>"). Files appear atomically via link(), so
/// a concurrent lookup sees either nothing or the complete binding.
class DirectoryRegistry final : public NameRegistry {
 public:
  explicit DirectoryRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void publish(const std::string& name, const std::string& port) override {
    check_name(name);
    const auto target = dir_ / name;
    const auto tmp = dir_ / ("." + name + "." + std::to_string(::getpid()) + "." +
                             std::to_string(tmp_counter_++) + ".tmp");
    const Bytes bytes = encode(Frame{FrameType::Publish, to_bytes(name + "\n" + port)});
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw DpmError("cannot write " + tmp.string());
    }
    // link() fails if the target exists, which gives publish-once semantics.
    std::error_code ec;
    std::filesystem::create_hard_link(tmp, target, ec);
    std::filesystem::remove(tmp);
    if (ec == std::errc::file_exists) throw DuplicateName("name '" + name + "' is already published");
    if (ec) throw DpmError("cannot publish " + target.string() + ": " + ec.message());
  }

  std::optional<std::string> try_lookup(const std::string& name) override {
    check_name(name);
    std::ifstream in(dir_ / name, std::ios::binary);
    if (!in) return std::nullopt;
    const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const Frame f = decode(bytes);
    if (f.type != FrameType::Publish) throw DpmError("registry entry for '" + name + "' is not a Publish frame");
    const std::string text = to_text(f.payload);
    const auto nl = text.find('\n');
    if (nl == std::string::npos || text.substr(0, nl) != name)
      throw DpmError("registry entry for '" + name + "' is malformed");
    return text.substr(nl + 1);
  }

  void unpublish(const std::string& name) override {
    check_name(name);
    std::filesystem::remove(dir_ / name);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static void check_name(const std::string& name) {
    if (name.empty() || name.find_first_of("/\n") != std::string::npos || name[0] == '.')
      throw DpmError("invalid service name '" + name + "'");
  }

  std::filesystem::path dir_;
  std::atomic<unsigned> tmp_counter_{0};
};

}  // namespace hqsim::dpm
