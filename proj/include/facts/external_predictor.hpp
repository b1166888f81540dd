// Copyright 2026 The facts Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FACTS_EXTERNAL_PREDICTOR_HPP_
#define FACTS_EXTERNAL_PREDICTOR_HPP_

#include <memory>
#include <string>
#include <vector>

#include "facts/predictor.hpp"

namespace facts {

// Newline-delimited byte channel to an external scoring peer.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // Blocks up to timeout_ms for the next line (without the newline).
  // Returns false on end of stream.
  virtual bool read_line(std::string* line, int timeout_ms) = 0;
};

// Spawned subprocess speaking the protocol on its standard input/output.
std::unique_ptr<LineChannel> open_process_channel(
    const std::vector<std::string>& argv);

// TCP endpoint, address "host:port".
std::unique_ptr<LineChannel> open_tcp_channel(const std::string& address);

// Scores through the JSON-lines protocol: request {"id":k,"x":[...]},
// response {"id":k,"score":s}. Responses may arrive out of order and are
// matched by id; requests are batched.
class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::unique_ptr<LineChannel> channel, int input_dim,
                    int timeout_ms = 30000);

  double score(const Eigen::VectorXd& x) const override;
  std::vector<double> score_batch(
      const std::vector<Eigen::VectorXd>& xs) const override;
  int input_dim() const override { return input_dim_; }
  std::string kind() const override { return "external"; }

 private:
  std::unique_ptr<LineChannel> channel_;
  int input_dim_;
  int timeout_ms_;
  mutable long next_id_ = 0;
  mutable long lines_read_ = 0;
};

}  // namespace facts

#endif  // FACTS_EXTERNAL_PREDICTOR_HPP_
