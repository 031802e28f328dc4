#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rapidraid/transport.hpp"

namespace rapidraid {

/// TCP endpoint speaking the framed-chunk wire protocol. One reader thread
/// per accepted connection; frames are handed to the registered handler in
/// arrival order per connection. Frames on the wire are byte-identical to
/// the simulated transport's encoding.
class SocketEndpoint {
public:
    using FrameHandler = std::function<void(const ChunkFrame&)>;
    using ErrorHandler = std::function<void(const std::string&)>;
    using DisconnectHandler = std::function<void()>;

    /// Binds 127.0.0.1:port and starts accepting. port 0 picks a free port.
    explicit SocketEndpoint(uint16_t port = 0);
    ~SocketEndpoint();

    SocketEndpoint(const SocketEndpoint&) = delete;
    SocketEndpoint& operator=(const SocketEndpoint&) = delete;

    uint16_t port() const { return port_; }
    void set_frame_handler(FrameHandler h);
    void set_error_handler(ErrorHandler h);
    /// Fires when any inbound connection ends, cleanly or not.
    void set_disconnect_handler(DisconnectHandler h);

    /// Outbound connection; sends block until written.
    class Connection {
    public:
        ~Connection();
        void send(const ChunkFrame& frame);
        void close();

    private:
        friend class SocketEndpoint;
        explicit Connection(int fd) : fd_(fd) {}
        int fd_;
    };

    static std::unique_ptr<Connection> connect(const std::string& host,
                                                uint16_t port);

    /// Stop accepting and join reader threads.
    void shutdown();

private:
    void accept_loop();
    void read_loop(int fd);

    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::vector<std::thread> readers_;
    std::vector<int> conn_fds_;
    std::mutex mutex_;
    FrameHandler on_frame_;
    ErrorHandler on_error_;
    DisconnectHandler on_disconnect_;
};

}  // namespace rapidraid
