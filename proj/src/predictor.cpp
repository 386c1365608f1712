#include "natrob/predictor.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "natrob/error.hpp"
#include "natrob/image_io.hpp"

namespace natrob {

void PredictionTable::insert(PredictionRecord rec) {
  if (!rec.logits.empty()) {
    int k = static_cast<int>(rec.logits.size());
    if (num_classes_ == 0) num_classes_ = k;
    if (k != num_classes_) {
      fail(ErrorCode::ParseError, "inconsistent logit length for model " + rec.model_id);
    }
    if (rec.predicted_label != argmax_lowest(rec.logits)) {
      fail(ErrorCode::ParseError, "predicted_label is not argmax(logits) for shot " + rec.shot_id);
    }
  }
  if (num_classes_ > 0 && (rec.predicted_label < 0 || rec.predicted_label >= num_classes_)) {
    fail(ErrorCode::LabelOutOfRange,
         "label " + std::to_string(rec.predicted_label) + " outside [0, " + std::to_string(num_classes_) + ")");
  }
  if (rec.predicted_label < 0) fail(ErrorCode::LabelOutOfRange, "negative label");
  PredictionKey key{rec.model_id, rec.shot_id, rec.transform};
  auto [it, inserted] = records_.emplace(std::move(key), std::move(rec));
  if (!inserted) {
    fail(ErrorCode::DuplicateKey, "duplicate prediction for (" + it->first.model_id + ", " +
                                      it->first.shot_id + ", " + it->first.transform.str() + ")");
  }
}

void PredictionTable::set_num_classes(int k) {
  num_classes_ = k;
  for (const auto& [key, rec] : records_) {
    if (rec.predicted_label < 0 || rec.predicted_label >= k) {
      fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(rec.predicted_label));
    }
  }
}

const PredictionRecord* PredictionTable::find(const PredictionKey& key) const {
  auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<std::string> PredictionTable::model_ids() const {
  std::vector<std::string> out;
  for (const auto& [key, rec] : records_) {
    if (out.empty() || out.back() != key.model_id) out.push_back(key.model_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

const char* kPredHeader =
    "model_id,shot_id,frame_offset,transform_family,severity,seed,predicted_label,logits";

}  // namespace

PredictionTable load_predictions(const std::filesystem::path& path, int expected_k) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open predictions " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "empty prediction file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPredHeader) fail(ErrorCode::ParseError, "prediction header mismatch: " + line);

  PredictionTable table;
  if (expected_k > 0) table.set_num_classes(expected_k);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 8) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 8 fields");
    }
    PredictionRecord rec;
    rec.model_id = fields[0];
    rec.shot_id = fields[1];
    try {
      rec.frame_offset = std::stoi(fields[2]);
      rec.transform.family = fields[3];
      rec.transform.severity = std::stoi(fields[4]);
      rec.seed = std::stoull(fields[5]);
      rec.predicted_label = std::stoi(fields[6]);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": malformed numeric field");
    }
    if (!fields[7].empty()) {
      std::stringstream ls(fields[7]);
      std::string tok;
      while (std::getline(ls, tok, ';')) {
        try {
          rec.logits.push_back(std::stod(tok));
        } catch (const std::exception&) {
          fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": malformed logit");
        }
      }
    }
    if (expected_k > 0 && rec.predicted_label >= expected_k) {
      fail(ErrorCode::LabelOutOfRange, "line " + std::to_string(line_no) + ": label " + fields[6]);
    }
    table.insert(std::move(rec));
  }
  return table;
}

void save_predictions(const PredictionTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write predictions " + path.string());
  out << kPredHeader << "\n";
  char buf[64];
  for (const auto& [key, rec] : table.records()) {
    out << rec.model_id << ',' << rec.shot_id << ',' << rec.frame_offset << ','
        << rec.transform.family << ',' << rec.transform.severity << ',' << rec.seed << ','
        << rec.predicted_label << ',';
    for (size_t i = 0; i < rec.logits.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", rec.logits[i]);
      if (i) out << ';';
      out << buf;
    }
    out << "\n";
  }
}

std::vector<double> featurize(const Image& img) {
  ImageF small = resize(to_float(img), kFeatureSide, kFeatureSide, ResizeMode::box);
  std::vector<double> out(small.data.begin(), small.data.end());
  return out;
}

std::vector<double> predict_builtin(const MLPModel& model, const Image& img) {
  if (model.input_size() != kFeatureDim) {
    fail(ErrorCode::ShapeMismatch, "builtin model input size must be " + std::to_string(kFeatureDim));
  }
  return forward(model, featurize(img));
}

namespace {

constexpr char kB64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

class Socket {
 public:
  Socket() = default;
  ~Socket() { close(); }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  void connect_to(const std::string& host, int port, int timeout_ms) {
    close();
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) fail(ErrorCode::ConnectionError, "socket() failed");
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      hostent* he = ::gethostbyname(host.c_str());
      if (!he || he->h_addrtype != AF_INET) fail(ErrorCode::ConnectionError, "cannot resolve " + host);
      std::memcpy(&addr.sin_addr, he->h_addr_list[0], sizeof(addr.sin_addr));
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      close();
      fail(ErrorCode::ConnectionError, "cannot connect to " + host + ":" + std::to_string(port));
    }
  }

  void send_all(const std::string& data) {
    size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) fail(ErrorCode::ConnectionError, "send failed");
      sent += static_cast<size_t>(n);
    }
  }

  std::string recv_line() {
    std::string line;
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n == 0) fail(ErrorCode::ConnectionError, "connection closed mid-response");
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) fail(ErrorCode::Timeout, "service read timed out");
        fail(ErrorCode::ConnectionError, "recv failed");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    buffer_.clear();
  }
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace

std::string base64_encode(const std::vector<uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (size_t i = 0; i < data.size(); i += 3) {
    uint32_t v = data[i] << 16;
    if (i + 1 < data.size()) v |= data[i + 1] << 8;
    if (i + 2 < data.size()) v |= data[i + 2];
    out.push_back(kB64Chars[(v >> 18) & 63]);
    out.push_back(kB64Chars[(v >> 12) & 63]);
    out.push_back(i + 1 < data.size() ? kB64Chars[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < data.size() ? kB64Chars[v & 63] : '=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  std::vector<uint8_t> out;
  uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = b64_value(c);
    if (v < 0) fail(ErrorCode::ParseError, "invalid base64 character");
    acc = (acc << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::vector<std::vector<double>> query_service(const std::string& endpoint,
                                               const std::vector<Image>& frames,
                                               const ServiceOptions& options) {
  auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::InvalidConfig, "endpoint must be host:port");
  std::string host = endpoint.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "bad port in endpoint " + endpoint);
  }

  std::vector<std::vector<double>> results(frames.size());
  size_t next = 0;
  int attempts = 0;
  Socket sock;
  bool connected = false;
  while (next < frames.size()) {
    try {
      if (!connected) {
        sock.connect_to(host, port, options.timeout_ms);
        connected = true;
      }
      nlohmann::json req;
      req["id"] = static_cast<int>(next);
      req["png_b64"] = base64_encode(encode_png(frames[next]));
      sock.send_all(req.dump() + "\n");
      std::string line = sock.recv_line();
      nlohmann::json resp;
      try {
        resp = nlohmann::json::parse(line);
      } catch (const std::exception&) {
        fail(ErrorCode::ProtocolError, "malformed response line");
      }
      if (!resp.contains("id") || !resp.contains("logits") || !resp["logits"].is_array()) {
        fail(ErrorCode::ProtocolError, "response missing id/logits");
      }
      if (resp["id"].get<int>() != static_cast<int>(next)) {
        fail(ErrorCode::ProtocolError, "response id mismatch");
      }
      auto logits = resp["logits"].get<std::vector<double>>();
      if (next > 0 && logits.size() != results[0].size()) {
        fail(ErrorCode::ProtocolError, "wrong-length logit vector");
      }
      if (logits.empty()) fail(ErrorCode::ProtocolError, "empty logit vector");
      results[next] = std::move(logits);
      ++next;
      attempts = 0;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConnectionError || e.code() == ErrorCode::Timeout) {
        connected = false;
        if (++attempts > options.max_retries) throw;
      } else {
        throw;
      }
    }
  }
  return results;
}

}  // namespace natrob
