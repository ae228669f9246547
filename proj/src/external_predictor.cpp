#include "ctbridge/external_predictor.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ctbridge/errors.hpp"

namespace ctbridge {

ExternalPredictor::ExternalPredictor(std::vector<std::string> argv)
    : argv_(std::move(argv)) {
  if (argv_.empty()) throw IoError("external predictor: empty command");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw IoError("external predictor: pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw IoError("external predictor: pipe failed");
  }
  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw IoError("external predictor: fork failed");
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // A dead child must surface as an IoError on write, not kill the sampler.
  signal(SIGPIPE, SIG_IGN);
}

ExternalPredictor::~ExternalPredictor() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

void ExternalPredictor::write_all(const void* data, std::size_t n) const {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = write(to_child_, p, n);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) throw IoError("external predictor: write failed: " + std::string(std::strerror(errno)));
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void ExternalPredictor::read_all(void* data, std::size_t n) const {
  char* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t r = read(from_child_, p, n);
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) throw IoError("external predictor: child closed its output");
    if (r < 0) throw IoError("external predictor: read failed: " + std::string(std::strerror(errno)));
    p += r;
    n -= static_cast<std::size_t>(r);
  }
}

ImageGrid ExternalPredictor::predict(const ImageGrid& xt, double t,
                                     const ImageGrid& xfbp) const {
  require_same_shape(xt, xfbp, "ExternalPredictor");
  std::lock_guard lock(mutex_);
  const auto h = static_cast<std::uint32_t>(xt.height());
  const auto w = static_cast<std::uint32_t>(xt.width());
  const std::size_t bytes = xt.size() * sizeof(double);
  write_all(&kPredictRequestMagic, sizeof(kPredictRequestMagic));
  write_all(&t, sizeof(t));
  write_all(&h, sizeof(h));
  write_all(&w, sizeof(w));
  write_all(xt.data().data(), bytes);
  write_all(xfbp.data().data(), bytes);

  std::uint32_t magic = 0;
  read_all(&magic, sizeof(magic));
  if (magic != kPredictResponseMagic) {
    throw IoError("external predictor: bad response magic");
  }
  ImageGrid out(xt.height(), xt.width(), xt.pixel_size());
  read_all(out.data().data(), bytes);
  return out;
}

}  // namespace ctbridge
