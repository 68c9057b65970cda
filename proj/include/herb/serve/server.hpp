#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "herb/serve/engine.hpp"

namespace httplib {
class Server;
}

namespace herb::serve {

struct ServeConfig {
    std::filesystem::path model;
    std::filesystem::path herb_info;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::size_t default_k = kDefaultTopK;
    int threads = 8;
};

// Parses "host:port" (or ":port", or "port").
void parse_bind(const std::string& bind, ServeConfig& config);
// Applies HERB_MODEL, HERB_INFO, and HERB_BIND when set.
void apply_environment(ServeConfig& config);

// HTTP front end:
//   POST /v1/predict?k=N   raw image body, multipart field "image", or JSON {"image": base64, "k": N}
//   GET  /v1/herbs         every herb-info record
//   GET  /v1/herbs/{name}  one record or 404
//   GET  /v1/health        200 once the model is loaded, 503 before
// Requests needing the model answer 503 until loading completes.
class Server {
public:
    using Loader = std::function<Engine()>;

    // Loads the engine from config.model / config.herb_info.
    explicit Server(ServeConfig config);
    // Custom loader, run on a background thread by start().
    Server(ServeConfig config, Loader loader);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds, begins loading the model in the background, and starts accepting
    // requests on a worker thread. Throws std::runtime_error if binding fails.
    void start();
    // Blocks until stop() is called from another thread or a signal handler.
    void wait();
    // Stops accepting connections and drains in-flight requests.
    void stop();

    int port() const { return port_; }
    bool ready() const;
    // Blocks until loading finishes; returns false if it failed.
    bool wait_until_loaded() const;
    std::optional<std::string> load_error() const;

private:
    void install_routes();
    std::shared_ptr<const Engine> engine() const;

    ServeConfig config_;
    Loader loader_;
    std::unique_ptr<httplib::Server> http_;
    std::thread listener_;
    std::thread loader_thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    mutable std::condition_variable loaded_cv_;
    std::shared_ptr<const Engine> engine_;
    std::optional<std::string> load_error_;
    bool load_finished_ = false;
};

}  // namespace herb::serve
