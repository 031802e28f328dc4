#include "rapidraid/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace rapidraid {

namespace {

void write_all(int fd, const uint8_t* data, size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) throw std::runtime_error("socket: write failed");
        data += n;
        len -= static_cast<size_t>(n);
    }
}

// false on clean EOF at a frame boundary
bool read_all(int fd, uint8_t* data, size_t len, bool at_boundary) {
    size_t got = 0;
    while (got < len) {
        const ssize_t n = ::read(fd, data + got, len - got);
        if (n == 0) {
            if (got == 0 && at_boundary) return false;
            throw std::runtime_error("socket: connection truncated mid-frame");
        }
        if (n < 0) throw std::runtime_error("socket: read failed");
        got += static_cast<size_t>(n);
    }
    return true;
}

}  // namespace

SocketEndpoint::SocketEndpoint(uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket: cannot create");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(listen_fd_);
        throw std::runtime_error("socket: bind failed");
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 64) < 0) {
        ::close(listen_fd_);
        throw std::runtime_error("socket: listen failed");
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
}

SocketEndpoint::~SocketEndpoint() { shutdown(); }

void SocketEndpoint::set_frame_handler(FrameHandler h) {
    std::lock_guard lock(mutex_);
    on_frame_ = std::move(h);
}

void SocketEndpoint::set_error_handler(ErrorHandler h) {
    std::lock_guard lock(mutex_);
    on_error_ = std::move(h);
}

void SocketEndpoint::accept_loop() {
    while (!stopping_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;  // listener closed
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mutex_);
        conn_fds_.push_back(fd);
        readers_.emplace_back([this, fd] { read_loop(fd); });
    }
}

void SocketEndpoint::read_loop(int fd) {
    try {
        for (;;) {
            std::array<uint8_t, kFrameHeaderSize> header;
            if (!read_all(fd, header.data(), header.size(), true)) break;
            const FrameHeader h = decode_frame_header(
                std::span<const uint8_t, kFrameHeaderSize>(header));
            auto payload = std::make_shared<std::vector<uint8_t>>(h.payload_length);
            if (h.payload_length > 0)
                read_all(fd, payload->data(), payload->size(), false);
            ChunkFrame frame = ChunkFrame::make(
                h.object, h.role, h.stage, h.sequence,
                std::shared_ptr<const std::vector<uint8_t>>(payload));
            FrameHandler handler;
            {
                std::lock_guard lock(mutex_);
                handler = on_frame_;
            }
            if (handler) handler(frame);
        }
    } catch (const std::exception& e) {
        ErrorHandler handler;
        {
            std::lock_guard lock(mutex_);
            handler = on_error_;
        }
        if (handler && !stopping_) handler(e.what());
    }
    {
        DisconnectHandler handler;
        {
            std::lock_guard lock(mutex_);
            handler = on_disconnect_;
        }
        if (handler && !stopping_) handler();
    }
    ::close(fd);
}

void SocketEndpoint::set_disconnect_handler(DisconnectHandler h) {
    std::lock_guard lock(mutex_);
    on_disconnect_ = std::move(h);
}

std::unique_ptr<SocketEndpoint::Connection> SocketEndpoint::connect(
    const std::string& host, uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket: cannot create");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw input_error("socket: bad host address " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd);
        throw std::runtime_error("socket: connect to " + host + " failed");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::unique_ptr<Connection>(new Connection(fd));
}

void SocketEndpoint::shutdown() {
    if (stopping_.exchange(true)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> readers;
    {
        std::lock_guard lock(mutex_);
        // unblock readers parked in ::read
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        conn_fds_.clear();
        readers.swap(readers_);
    }
    for (auto& t : readers)
        if (t.joinable()) t.join();
}

SocketEndpoint::Connection::~Connection() { close(); }

void SocketEndpoint::Connection::send(const ChunkFrame& frame) {
    std::array<uint8_t, kFrameHeaderSize> header;
    encode_frame_header(frame, std::span<uint8_t, kFrameHeaderSize>(header));
    write_all(fd_, header.data(), header.size());
    if (!frame.payload.empty())
        write_all(fd_, frame.payload.data(), frame.payload.size());
}

void SocketEndpoint::Connection::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

}  // namespace rapidraid
