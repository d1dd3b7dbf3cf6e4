#include <httplib.h>

#include "pipewright/tools/service.hpp"

namespace pipewright::tools {

void serve_http(Service& service, const std::string& host, int port) {
  httplib::Server server;
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) api.query[k] = v;
    ApiResponse out = service.handle(api);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
  server.Put(R"(/.*)", dispatch);
  server.Delete(R"(/.*)", dispatch);
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace pipewright::tools
