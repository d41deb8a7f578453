#ifndef QUAYSIM_TESTS_FAKE_DEPLOYER_H_
#define QUAYSIM_TESTS_FAKE_DEPLOYER_H_

#include <optional>
#include <vector>

#include "quaysim/controller.h"

namespace quaysim::testing {

// Places instances round-robin over `workers` workers with unlimited slots
// unless `capacity` is set.
class FakeDeployer : public InstanceDeployer {
 public:
  explicit FakeDeployer(int workers = 1, int cores = 8) : workers_(workers), cores_(cores) {}

  std::optional<DeployedInstance> deploy(int) override {
    if (capacity && live_ >= *capacity) return std::nullopt;
    const int id = next_++;
    ++live_;
    deployed.push_back(id);
    return DeployedInstance{id, id % workers_};
  }
  void undeploy(int instance) override {
    --live_;
    undeployed.push_back(instance);
  }
  int worker_cores(int) const override { return cores_; }

  std::optional<int> capacity;
  std::vector<int> deployed;
  std::vector<int> undeployed;

 private:
  int workers_;
  int cores_;
  int next_ = 0;
  int live_ = 0;
};

}  // namespace quaysim::testing

#endif  // QUAYSIM_TESTS_FAKE_DEPLOYER_H_
