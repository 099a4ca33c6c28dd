#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "offload/wire/wire.hpp"

namespace offload::service {

// Frames over a connected stream socket, using the byte-exact frame
// layout, so separate processes can speak to the service. One frame per
// send_frame(); receive_some() blocks for at least one complete frame
// (or peer close) and drains whatever else has arrived. Socket failures
// throw std::system_error; malformed peer bytes latch parse_failed().
class FrameSocket {
public:
    explicit FrameSocket(int fd);
    FrameSocket(FrameSocket&& other) noexcept;
    FrameSocket& operator=(FrameSocket&& other) noexcept;
    FrameSocket(const FrameSocket&) = delete;
    FrameSocket& operator=(const FrameSocket&) = delete;
    ~FrameSocket();

    // Connected AF_UNIX pair, for in-host pipelines and tests.
    static std::pair<FrameSocket, FrameSocket> local_pair();
    static FrameSocket connect_tcp(const std::string& host, uint16_t port);
    // Listens on loopback:port, accepts exactly one peer, closes the
    // listener. Returns the connected socket.
    static FrameSocket accept_one_tcp(uint16_t port);

    void send_frame(const wire::Frame& f);
    std::vector<wire::Frame> receive_some();

    bool peer_closed() const { return closed_; }
    bool parse_failed() const { return parser_.failed(); }
    int fd() const { return fd_; }

private:
    int fd_ = -1;
    wire::FrameStreamParser parser_;
    bool closed_ = false;
};

}  // namespace offload::service
