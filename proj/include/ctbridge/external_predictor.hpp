#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "ctbridge/predictor.hpp"

namespace ctbridge {

/// Frame magics: the request starts with the bytes "PDBQ", the response with
/// "PDBR".
inline constexpr std::uint32_t kPredictRequestMagic = 0x51424450u;
inline constexpr std::uint32_t kPredictResponseMagic = 0x52424450u;

/// Predictor served by a child process over its stdin/stdout.
///
/// Request: u32 magic, f64 t, u32 H, u32 W, H*W f64 X_t, H*W f64 X_FBP.
/// Response: u32 magic, H*W f64 X0hat. Little-endian, one request in flight;
/// calls are serialized internally.
class ExternalPredictor final : public Predictor {
 public:
  // argv[0] is resolved through PATH. Throws IoError if the spawn fails.
  explicit ExternalPredictor(std::vector<std::string> argv);
  ~ExternalPredictor() override;
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  ImageGrid predict(const ImageGrid& xt, double t,
                    const ImageGrid& xfbp) const override;
  bool concurrent_safe() const override { return false; }

 private:
  void write_all(const void* data, std::size_t n) const;
  void read_all(void* data, std::size_t n) const;

  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::mutex mutex_;
};

}  // namespace ctbridge
