// SPDX-License-Identifier: Apache-2.0
//
// Minimal library use: generate a small dataset, train the predictor for a
// few epochs and predict the beam for one query.

#include <beampred/predictor/train.hpp>

#include <iostream>

using namespace beampred;

int main()
{
    datagen::DatasetConfig dc;
    dc.num_samples = 200;
    dc.seed = 3;
    const auto ds = datagen::generate_dataset(dc, 1);

    predictor::TrainSettings ts;
    ts.epochs = 3;
    auto res = predictor::train(ds, predictor::predictor_config_for(ds), ts,
                                [](const predictor::EpochStats &e) {
                                    std::cout << "epoch " << e.epoch << " train " << e.train_loss << " val "
                                              << e.val_loss << "\n";
                                });

    const auto &s = ds.samples[ds.indices(datagen::Split::validation).front()];
    const auto &q = s.queries.front();
    const auto out =
        predictor::predict_beam(res.model, s.csi_history, {dc.scenario.low_csi_period_s, s.csi_time_s, q.time_s});
    std::cout << "query eta " << q.eta << ": predicted beam " << out.chosen_beam << ", optimal " << q.optimal_beam
              << "\n";
}
