#include "herb/serve/server.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

namespace herb::serve {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
}

std::size_t parse_k(const std::string& text) {
    std::size_t k = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
    if (ec != std::errc{} || end != text.data() + text.size()) throw RequestError(400, "k must be a positive integer");
    return k;
}

}  // namespace

void parse_bind(const std::string& bind, ServeConfig& config) {
    std::string host = config.host;
    std::string port = bind;
    if (const auto colon = bind.rfind(':'); colon != std::string::npos) {
        host = bind.substr(0, colon);
        port = bind.substr(colon + 1);
        if (host.empty()) host = config.host;
    }
    int value = 0;
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || end != port.data() + port.size() || value < 0 || value > 65535) {
        throw std::invalid_argument("bad bind address '" + bind + "'");
    }
    config.host = host;
    config.port = value;
}

void apply_environment(ServeConfig& config) {
    if (const char* v = std::getenv("HERB_MODEL"); v != nullptr && *v != '\0') config.model = v;
    if (const char* v = std::getenv("HERB_INFO"); v != nullptr && *v != '\0') config.herb_info = v;
    if (const char* v = std::getenv("HERB_BIND"); v != nullptr && *v != '\0') parse_bind(v, config);
}

Server::Server(ServeConfig config)
    : Server(config, [config] { return Engine::load(config.model, config.herb_info); }) {}

Server::Server(ServeConfig config, Loader loader) : config_(std::move(config)), loader_(std::move(loader)) {}

Server::~Server() {
    stop();
    if (loader_thread_.joinable()) loader_thread_.join();
}

std::shared_ptr<const Engine> Server::engine() const {
    std::lock_guard lock(mutex_);
    return engine_;
}

bool Server::ready() const { return engine() != nullptr; }

bool Server::wait_until_loaded() const {
    std::unique_lock lock(mutex_);
    loaded_cv_.wait(lock, [this] { return load_finished_; });
    return engine_ != nullptr;
}

std::optional<std::string> Server::load_error() const {
    std::lock_guard lock(mutex_);
    return load_error_;
}

void Server::install_routes() {
    http_->set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
    });
    http_->Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    http_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
        const auto e = engine();
        if (!e) {
            const auto error = load_error();
            json body{{"status", error ? "error" : "loading"}};
            if (error) body["error"] = *error;
            reply(res, 503, body);
            return;
        }
        reply(res, 200,
              json{{"status", "ok"},
                   {"model_name", e->model_name()},
                   {"package_crc32", crc_hex(e->package_crc32())},
                   {"classes", e->num_classes()},
                   {"herbs", e->herbs().size()}});
    });

    http_->Get("/v1/herbs", [this](const httplib::Request&, httplib::Response& res) {
        const auto e = engine();
        if (!e) return reply_error(res, 503, "model not loaded");
        reply(res, 200, json(e->herbs().all()));
    });

    http_->Get(R"(/v1/herbs/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return reply_error(res, 503, "model not loaded");
        const std::string name = req.matches[1];
        const auto info = e->herbs().lookup(name);
        if (!info) return reply_error(res, 404, "unknown herb '" + name + "'");
        reply(res, 200, json(*info));
    });

    http_->Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return reply_error(res, 503, "model not loaded");
        try {
            std::size_t k = e->default_k(config_.default_k);
            if (req.has_param("k")) k = parse_k(req.get_param_value("k"));
            std::vector<std::uint8_t> image;
            if (req.is_multipart_form_data()) {
                if (!req.has_file("image")) throw RequestError(400, "multipart body has no \"image\" field");
                const auto& content = req.get_file_value("image").content;
                image.assign(content.begin(), content.end());
            } else if (req.get_header_value("Content-Type").starts_with("application/json")) {
                json doc;
                try {
                    doc = json::parse(req.body);
                    if (doc.contains("k")) k = doc.at("k").get<std::size_t>();
                    image = base64_decode(doc.at("image").get<std::string>());
                } catch (const std::exception& err) {
                    throw RequestError(400, std::string("bad JSON image payload: ") + err.what());
                }
            } else {
                image.assign(req.body.begin(), req.body.end());
            }
            if (image.empty()) throw RequestError(400, "empty image");
            reply(res, 200, to_json(e->predict(image, k)));
        } catch (const RequestError& err) {
            reply_error(res, err.status(), err.what());
        }
    });

    http_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        } catch (...) {
        }
        std::cerr << "error: " << message << '\n';
        reply_error(res, 500, message);
    });
}

void Server::start() {
    if (http_) throw std::logic_error("server already started");
    http_ = std::make_unique<httplib::Server>();
    const int threads = std::max(1, config_.threads);
    http_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    http_->set_payload_max_length(64u << 20);
    install_routes();

    if (config_.port == 0) {
        port_ = http_->bind_to_any_port(config_.host);
        if (port_ < 0) throw std::runtime_error("cannot bind " + config_.host);
    } else {
        if (!http_->bind_to_port(config_.host, config_.port)) {
            throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
        }
        port_ = config_.port;
    }

    loader_thread_ = std::thread([this] {
        std::shared_ptr<const Engine> loaded;
        std::optional<std::string> error;
        try {
            loaded = std::make_shared<const Engine>(loader_());
        } catch (const std::exception& e) {
            error = e.what();
            std::cerr << "error: model load failed: " << *error << '\n';
        }
        {
            std::lock_guard lock(mutex_);
            engine_ = std::move(loaded);
            load_error_ = std::move(error);
            load_finished_ = true;
        }
        loaded_cv_.notify_all();
    });
    listener_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void Server::wait() {
    if (listener_.joinable()) listener_.join();
}

void Server::stop() {
    if (http_) http_->stop();
    if (listener_.joinable()) listener_.join();
}

}  // namespace herb::serve
