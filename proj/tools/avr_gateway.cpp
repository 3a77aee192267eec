#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "avr/gateway.hpp"

namespace {

int g_log_level = 1;  // 0 = error, 1 = info, 2 = debug

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << "[avr-gateway] " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AVR routing gateway: routes CUA tool calls to the cheapest sufficient VLM"};
  std::string config_path = "config/gateway.json";
  std::string listen_override;
  std::string log_level = "info";
  app.add_option("--config", config_path, "Path to the gateway config file");
  app.add_option("--listen", listen_override, "Override listen address (host:port)");
  app.add_option("--log-level", log_level, "error | info | debug");
  CLI11_PARSE(app, argc, argv);

  g_log_level = log_level == "error" ? 0 : log_level == "debug" ? 2 : 1;

  try {
    avr::GatewayConfig cfg = avr::load_gateway_config(config_path);
    if (!listen_override.empty()) cfg.listen = listen_override;
    avr::Gateway gateway(std::move(cfg));
    gateway.bind();
    log_info("pool of " + std::to_string(gateway.config().pool.size()) + " models, listening on " +
             gateway.config().listen.substr(0, gateway.config().listen.rfind(':')) + ":" +
             std::to_string(gateway.port()));
    gateway.run();
  } catch (const avr::Error& e) {
    std::cerr << "[avr-gateway] fatal: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "[avr-gateway] fatal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
