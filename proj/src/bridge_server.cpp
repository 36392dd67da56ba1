#include "ar3n/bridge_server.hpp"

#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "ar3n/model_io.hpp"

namespace ar3n {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const ServerConfig& config, std::string id)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), config_(config), id_(std::move(id)) {}

  void open() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_accepted();
    });
  }

  void close() {
    closed_ = true;
    timer_.cancel();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_accepted() {
    try {
      protocol_ = std::make_unique<Protocol>(config_.session, config_.model);
    } catch (const Error& e) {
      send_error(e.what());
      return;
    }
    send({{"v", kMessageVersion},
          {"type", "hello"},
          {"session", id_},
          {"trial", std::string(to_string(protocol_->current_trial()))}});
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->read();
    });
  }

  void handle(const std::string& text) {
    try {
      const ClientMessage msg = parse_client_message(text);
      if (msg.input) {
        if (Session* s = protocol_ ? protocol_->session() : nullptr) s->apply_input(*msg.input);
      } else if (msg.control) {
        control(msg.control->action);
      }
    } catch (const Error& e) {
      send_error(e.what());
    }
  }

  void control(ControlMessage::Action action) {
    if (!protocol_) throw Error("no protocol");
    switch (action) {
      case ControlMessage::Action::start:
      case ControlMessage::Action::next:
        if (!protocol_->idle()) {
          if (action == ControlMessage::Action::start) throw Error("a trial is already running");
          end_trial(protocol_->finish());
          return;
        }
        start_trial();
        return;
      case ControlMessage::Action::abort:
        if (protocol_->idle()) throw Error("no trial is running");
        end_trial(protocol_->abort());
        return;
    }
  }

  void start_trial() {
    Session& s = protocol_->start();
    send(tick_to_json(s.snapshot()));
    next_tick_ = std::chrono::steady_clock::now() + config_.tick_period;
    schedule();
  }

  void schedule() {
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->on_tick();
    });
  }

  void on_tick() {
    Session* s = protocol_->session();
    if (!s) return;
    send(tick_to_json(s->tick()));
    if (s->finished()) {
      end_trial(protocol_->finish());
      return;
    }
    next_tick_ += config_.tick_period;
    // Fall back to the current time after a long stall instead of bursting.
    const auto now = std::chrono::steady_clock::now();
    if (next_tick_ + config_.tick_period < now) next_tick_ = now + config_.tick_period;
    schedule();
  }

  void end_trial(const TrialMetrics& metrics) {
    timer_.cancel();
    send(metrics_to_json(metrics));
    if (!config_.out_dir.empty()) {
      try {
        export_trial(std::filesystem::path(config_.out_dir) / id_ /
                         std::string(to_string(metrics.trial)),
                     metrics);
      } catch (const Error& e) {
        send_error(e.what());
      }
    }
    if (protocol_->complete()) {
      nlohmann::json paired = nlohmann::json::array();
      const TrialMetrics* t1 = nullptr;
      const TrialMetrics* t3 = nullptr;
      for (const TrialMetrics& m : protocol_->results()) {
        if (m.trial == TrialId::T1) t1 = &m;
        if (m.trial == TrialId::T3) t3 = &m;
      }
      if (t1 && t3)
        for (const PairedError& p : paired_errors(*t1, *t3))
          paired.push_back({{"shape", std::string(to_string(p.shape))},
                            {"T1", p.before},
                            {"T3", p.after}});
      send({{"v", kMessageVersion}, {"type", "protocol_end"}, {"paired", paired}});
    }
  }

  void send_error(const std::string& what) {
    send({{"v", kMessageVersion}, {"type", "error"}, {"message", what}});
  }

  void send(const nlohmann::json& j) {
    if (closed_) return;
    queue_.push_back(j.dump());
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->close();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  const ServerConfig& config_;
  std::string id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::unique_ptr<Protocol> protocol_;
  std::chrono::steady_clock::time_point next_tick_;
  bool closed_ = false;
};

}  // namespace

struct BridgeServer::Impl {
  ServerConfig config;
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::vector<std::weak_ptr<Connection>> connections;
  std::uint64_t next_id = 1;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<Connection>(std::move(socket), config,
                                            "s" + std::to_string(next_id++));
      connections.push_back(c);
      c->open();
      accept();
    });
  }
};

BridgeServer::BridgeServer(ServerConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  // Fail before serving if the model cannot be loaded; connections share it.
  ServerConfig& c = impl_->config;
  if (c.session.controller == ControllerKind::rl && !c.model) {
    if (c.session.model_path.empty()) throw Error("rl controller needs a model path");
    c.model = std::make_shared<const PolicyModel>(load_model(c.session.model_path));
  }
  Protocol probe(c.session, c.model);
  (void)probe;
  try {
    const tcp::endpoint ep(asio::ip::make_address(impl_->config.address), impl_->config.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(std::string("cannot listen on ") + impl_->config.address + ":" +
                std::to_string(impl_->config.port) + ": " + e.what());
  }
  impl_->accept();
}

BridgeServer::~BridgeServer() { stop(); }

unsigned short BridgeServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void BridgeServer::start() {
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void BridgeServer::run() { impl_->io.run(); }

void BridgeServer::stop() {
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (auto& w : impl->connections)
      if (auto c = w.lock()) c->close();
  });
  if (impl_->thread.joinable()) {
    impl_->thread.join();
  } else {
    impl_->io.stop();
  }
}

}  // namespace ar3n
