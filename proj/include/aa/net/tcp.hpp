#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace aa::net {

enum class ReadStatus { line, timeout, closed };

struct ReadResult {
    ReadStatus status = ReadStatus::closed;
    std::string line;  // without the trailing CR/LF
};

/// Blocking TCP connection with a line-oriented reader.
class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream();
    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    /// Returns an invalid stream on failure.
    static TcpStream connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

    bool valid() const noexcept { return fd_ >= 0; }
    bool send_all(std::string_view data);
    ReadResult read_line(std::chrono::milliseconds timeout);
    /// Shuts the socket down so a reader blocked in another thread wakes up.
    void shutdown();
    void close();

private:
    int fd_ = -1;
    std::string buffer_;
};

class TcpListener {
public:
    TcpListener() = default;
    ~TcpListener();
    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    /// Binds 127.0.0.1 on `port` (0 picks a free one). Throws std::runtime_error.
    static TcpListener bind_loopback(std::uint16_t port = 0);

    std::uint16_t port() const noexcept { return port_; }
    std::optional<TcpStream> accept(std::chrono::milliseconds timeout);
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace aa::net
