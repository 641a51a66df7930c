"""The contract layer: shares, costs, rejections, and the wealth ledger.

Run:  python demos/02_contracts_and_wealth.py
"""

import numpy as np

from contractgame.contracts import PAConfig, REJECT, WealthLedger, contract_step
from contractgame.env import CoinColor, GridState, Move, reset


def main():
    pa = PAConfig()
    print(f"types (hidden from the principal): red={pa.types[0]}, blue={pa.types[1]}")
    print(f"action cost c={pa.action_cost}, contract space [{pa.contract_lo}, {pa.contract_hi}]")

    # one hand-written step: red is next to a red coin, blue rejects
    state = GridState((0, 0), (2, 2), (0, 1), CoinColor.RED, t=0)
    rng = np.random.default_rng(0)
    _, cs = contract_step(pa, state, 0.5, (Move.RIGHT, REJECT), rng)
    print("\nalpha=0.5, red collects its own coin, blue rejects:")
    print(f"  raw rewards       {cs.raw_rewards}")
    print(f"  effective outputs {cs.effective_outputs}   (theta_i * r_i)")
    print(f"  agent payments    {cs.agent_payments}   (alpha*theta*r - c if acting)")
    print(f"  principal income  {cs.principal_income}")
    conserved = cs.agent_payments[0] + pa.action_cost + cs.principal_income
    print(f"  conservation: payment + c + share = {conserved} = theta*r")

    print("\nWhat the principal is allowed to see of that step:")
    print(" ", cs.principal_view())

    # a full random episode through the ledger
    ledger = WealthLedger()
    state = reset(pa.env, 42)
    rng = np.random.default_rng(42)
    for _ in range(pa.env.episode_length):
        alpha = float(rng.uniform(0.4, 0.9))
        actions = (int(rng.integers(6)), int(rng.integers(6)))
        state, _ = contract_step(pa, state, alpha, actions, rng, ledger)
    wealth = ledger.wealth_vector()
    print("\nAfter one random 100-step episode:")
    print(f"  wealth red={wealth[0]:.3f} blue={wealth[1]:.3f} principal={wealth[2]:.3f}")
    print(f"  welfare (sum) = {wealth.sum():.3f}")


if __name__ == "__main__":
    main()
