#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "somnav/engine.hpp"
#include "somnav/wire.hpp"

namespace somnav {

class ServeError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Line-oriented TCP front end for one Engine.
///
/// Concurrency: the engine is touched only by the loop thread. Reader
/// threads just frame bytes into lines and queue them; the loop thread
/// decodes, applies at cycle boundaries, and replies. Writes to one
/// connection are serialized by its own mutex.
///
/// Pacing: while running, a cycle fires every tick interval; resume also
/// reschedules the next cycle to "now", so an operator (or test) can drive
/// the service one deterministic cycle at a time by pairing messages with a
/// resume under a long tick. The server starts paused until first resume.
class Server {
public:
    Server(Engine& engine, std::uint16_t port, std::chrono::milliseconds tick,
           bool start_paused = true)
        : engine_(engine), tick_(tick), paused_(start_paused) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) {
            throw ServeError("socket: " + std::string(std::strerror(errno)));
        }
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            const std::string why = errno == EADDRINUSE ? "port-in-use"
                                                        : std::strerror(errno);
            ::close(listen_fd_);
            throw ServeError("bind port " + std::to_string(port) + ": " + why);
        }
        if (::listen(listen_fd_, 8) < 0) {
            ::close(listen_fd_);
            throw ServeError("listen: " + std::string(std::strerror(errno)));
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }

    ~Server() { stop(); }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const { return port_; }

    void start() {
        accept_thread_ = std::thread([this] { accept_loop(); });
        loop_thread_ = std::thread([this] { run_loop(); });
    }

    void stop() {
        {
            std::lock_guard lk(inbox_mu_);
            if (stopped_) return;
            stopped_ = true;
        }
        inbox_cv_.notify_all();
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        {
            std::lock_guard lk(conns_mu_);
            for (auto& c : conns_) close_conn(*c);
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        if (loop_thread_.joinable()) loop_thread_.join();
        std::lock_guard lk(conns_mu_);
        for (auto& c : conns_) {
            if (c->reader.joinable()) c->reader.join();
            if (c->fd >= 0) {
                ::close(c->fd);
                c->fd = -1;
            }
        }
    }

    /// Block until stop() is called from elsewhere (signal handler, test).
    void wait() {
        if (loop_thread_.joinable()) loop_thread_.join();
    }

private:
    struct Conn {
        int fd = -1;
        std::mutex write_mu;
        std::thread reader;
        std::atomic<bool> open{true};
        std::uint64_t last_seq = 0;  // loop thread only
        std::string rxbuf;           // reader thread only
    };

    struct InboxItem {
        std::shared_ptr<Conn> conn;
        std::string line;
        bool hangup = false;
    };

    void accept_loop() {
        for (;;) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) return;  // listener closed: shutting down
            auto conn = std::make_shared<Conn>();
            conn->fd = fd;
            {
                std::lock_guard lk(conns_mu_);
                conns_.push_back(conn);
            }
            conn->reader = std::thread([this, conn] { read_loop(conn); });
        }
    }

    void read_loop(const std::shared_ptr<Conn>& conn) {
        char buf[4096];
        while (conn->open.load()) {
            const ssize_t n = ::recv(conn->fd, buf, sizeof buf, 0);
            if (n <= 0) break;
            conn->rxbuf.append(buf, static_cast<std::size_t>(n));
            if (conn->rxbuf.size() > (1u << 20)) break;  // absurd frame: drop peer
            std::size_t nl;
            while ((nl = conn->rxbuf.find('\n')) != std::string::npos) {
                std::string line = conn->rxbuf.substr(0, nl);
                conn->rxbuf.erase(0, nl + 1);
                push({conn, std::move(line), false});
            }
        }
        push({conn, {}, true});
    }

    void push(InboxItem item) {
        {
            std::lock_guard lk(inbox_mu_);
            inbox_.push_back(std::move(item));
        }
        inbox_cv_.notify_one();
    }

    void run_loop() {
        using clock = std::chrono::steady_clock;
        auto next_tick = clock::now();
        std::unique_lock lk(inbox_mu_);
        for (;;) {
            if (stopped_) return;
            if (!inbox_.empty()) {
                std::deque<InboxItem> items;
                items.swap(inbox_);
                lk.unlock();
                for (auto& item : items) handle(item, next_tick);
                lk.lock();
                continue;
            }
            if (!paused_ && clock::now() >= next_tick) {
                lk.unlock();
                do_cycle();
                next_tick = clock::now() + tick_;
                lk.lock();
                continue;
            }
            const auto deadline = paused_ ? clock::now() + std::chrono::milliseconds(50)
                                          : next_tick;
            inbox_cv_.wait_until(lk, deadline,
                                 [this] { return stopped_ || !inbox_.empty(); });
        }
    }

    void handle(InboxItem& item, std::chrono::steady_clock::time_point& next_tick) {
        if (item.hangup) {
            close_conn(*item.conn);
            return;
        }
        if (item.line.find_first_not_of(" \t\r") == std::string::npos) return;
        wire::ClientMessage msg;
        try {
            msg = wire::decode_client(item.line);
        } catch (const wire::WireFormatError& e) {
            send(*item.conn, wire::Error{e.code(), e.what()});
            return;
        }
        const std::uint64_t seq = wire::seq_of(msg);
        if (seq <= item.conn->last_seq) {
            send(*item.conn,
                 wire::Error{"bad_seq", "seq must exceed " +
                                            std::to_string(item.conn->last_seq)});
            return;
        }
        item.conn->last_seq = seq;
        ApplyResult result = engine_.apply(msg);
        send(*item.conn, result.reply);
        for (const auto& ev : result.events) {
            if (std::holds_alternative<wire::HelpRequestMsg>(ev)) {
                broadcast(ev);  // the robot is stuck: everyone should know
            } else {
                send(*item.conn, ev);
            }
        }
        if (result.pace == ApplyResult::Pace::pause) {
            paused_ = true;
        } else if (result.pace == ApplyResult::Pace::resume) {
            paused_ = false;
            next_tick = std::chrono::steady_clock::now();
        }
    }

    void do_cycle() {
        const CycleRecord& rec = engine_.run_cycle();
        broadcast(engine_.state_message(++state_seq_));
        if (rec.decision.help) {
            broadcast(Engine::help_message(*rec.decision.help));
        }
    }

    void send(Conn& conn, const wire::ServerMessage& msg) {
        if (!conn.open.load()) return;
        const std::string bytes = wire::encode(msg);
        std::lock_guard lk(conn.write_mu);
        std::size_t sent = 0;
        while (sent < bytes.size()) {
            const ssize_t n = ::send(conn.fd, bytes.data() + sent, bytes.size() - sent,
                                     MSG_NOSIGNAL);
            if (n <= 0) {
                conn.open.store(false);
                return;
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    void broadcast(const wire::ServerMessage& msg) {
        std::vector<std::shared_ptr<Conn>> targets;
        {
            std::lock_guard lk(conns_mu_);
            targets = conns_;
        }
        for (auto& c : targets) {
            if (c->open.load()) send(*c, msg);
        }
    }

    void close_conn(Conn& conn) {
        if (conn.open.exchange(false)) {
            ::shutdown(conn.fd, SHUT_RDWR);
        }
        // fd stays valid until join to keep the reader's recv safe
    }

    Engine& engine_;
    std::chrono::milliseconds tick_;
    bool paused_;  // loop thread only
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::uint64_t state_seq_ = 0;

    std::thread accept_thread_;
    std::thread loop_thread_;

    std::mutex inbox_mu_;
    std::condition_variable inbox_cv_;
    std::deque<InboxItem> inbox_;
    bool stopped_ = false;

    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Conn>> conns_;
};

}  // namespace somnav
