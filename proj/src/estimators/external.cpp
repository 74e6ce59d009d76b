#include "autonilm/estimators/external.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace autonilm {

ExternalRegistry ExternalRegistry::from_environment() {
  ExternalRegistry reg;
  for (Method m : kAllMethods) {
    if (!is_external(m)) continue;
    const std::string var = "AUTONILM_EXT_" + std::string(to_string(m));
    if (const char* cmd = std::getenv(var.c_str()); cmd && *cmd) reg.add(m, ExternalEndpoint{cmd});
  }
  return reg;
}

void ExternalRegistry::add(Method method, ExternalEndpoint endpoint) {
  if (!is_external(method))
    throw ConfigError("method " + std::string(to_string(method)) + " has a native trainer");
  endpoints_[method] = std::move(endpoint);
}

const ExternalEndpoint* ExternalRegistry::find(Method method) const {
  auto it = endpoints_.find(method);
  return it == endpoints_.end() ? nullptr : &it->second;
}

void ExternalRegistry::require(const SearchSpace& space) const {
  for (Method m : space.methods())
    if (is_external(m) && !find(m))
      throw ConfigError("branch " + std::string(to_string(m)) +
                        " has no native trainer and no external objective; set AUTONILM_EXT_" +
                        std::string(to_string(m)) + " or remove the branch");
}

namespace {

struct Fd {
  int fd = -1;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double external_objective(const ExternalEndpoint& endpoint, const Configuration& config,
                          const std::string& dataset_ref) {
  static const bool ignore_sigpipe = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)ignore_sigpipe;

  nlohmann::json doc = to_json(config);
  doc["dataset"] = dataset_ref;
  const std::string input = doc.dump();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ExternalFailure(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ExternalFailure(std::string("pipe: ") + std::strerror(errno));
  }
  Fd child_in{in_pipe[0]}, parent_in{in_pipe[1]}, parent_out{out_pipe[0]}, child_out{out_pipe[1]};

  const pid_t pid = ::fork();
  if (pid < 0) throw ExternalFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(child_in.fd, STDIN_FILENO);
    ::dup2(child_out.fd, STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", endpoint.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  child_in.reset();
  child_out.reset();

  std::size_t written = 0;
  while (written < input.size()) {
    ssize_t w = ::write(parent_in.fd, input.data() + written, input.size() - written);
    if (w < 0) {
      if (errno == EINTR) continue;
      break;  // the command need not read its input
    }
    written += static_cast<std::size_t>(w);
  }
  parent_in.reset();

  const auto deadline = std::chrono::steady_clock::now() + endpoint.timeout;
  std::string output;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{parent_out.fd, POLLIN, 0};
    int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (r < 0 && errno != EINTR) break;
    if (r <= 0) continue;
    ssize_t n = ::read(parent_out.fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }

  int status = 0;
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
  }
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out)
    throw ExternalFailure("external objective timed out after " + std::to_string(endpoint.timeout.count()) + " ms");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw ExternalFailure("external objective exited with status " +
                          std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  const std::string text = trim(output);
  double loss = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), loss);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(loss))
    throw ExternalFailure("external objective printed '" + text + "' instead of a single number");
  return loss;
}

}  // namespace autonilm
