#include "offload/service/socket.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <iterator>
#include <stdexcept>
#include <system_error>
#include <utility>

namespace offload::service {

namespace {

[[noreturn]] void fail(const char* what) {
    throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

FrameSocket::FrameSocket(int fd) : fd_(fd) {
    if (fd_ < 0) throw std::invalid_argument("FrameSocket: bad descriptor");
}

FrameSocket::FrameSocket(FrameSocket&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      parser_(std::move(other.parser_)),
      closed_(other.closed_) {}

FrameSocket& FrameSocket::operator=(FrameSocket&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
        parser_ = std::move(other.parser_);
        closed_ = other.closed_;
    }
    return *this;
}

FrameSocket::~FrameSocket() {
    if (fd_ >= 0) ::close(fd_);
}

std::pair<FrameSocket, FrameSocket> FrameSocket::local_pair() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) fail("socketpair");
    return {FrameSocket(fds[0]), FrameSocket(fds[1])};
}

FrameSocket FrameSocket::connect_tcp(const std::string& host, uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::invalid_argument("connect_tcp: not an IPv4 address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        fail("connect");
    }
    return FrameSocket(fd);
}

FrameSocket FrameSocket::accept_one_tcp(uint16_t port) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) fail("socket");
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listener, 1) != 0) {
        ::close(listener);
        fail("bind/listen");
    }
    const int fd = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (fd < 0) fail("accept");
    return FrameSocket(fd);
}

void FrameSocket::send_frame(const wire::Frame& f) {
    const auto bytes = wire::encode_frame(f);
    size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send");
        }
        off += static_cast<size_t>(n);
    }
}

std::vector<wire::Frame> FrameSocket::receive_some() {
    std::vector<wire::Frame> out;
    uint8_t buf[64 * 1024];
    while (out.empty() && !closed_ && !parser_.failed()) {
        const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("recv");
        }
        if (n == 0) {
            closed_ = true;
            break;
        }
        auto frames = parser_.feed(std::span<const uint8_t>(buf, static_cast<size_t>(n)));
        out.insert(out.end(), std::make_move_iterator(frames.begin()),
                   std::make_move_iterator(frames.end()));
    }
    return out;
}

}  // namespace offload::service
