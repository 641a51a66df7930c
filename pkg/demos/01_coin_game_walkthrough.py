"""Walk through the raw gridworld: moves, collections, tie-breaks, respawns.

Run:  python demos/01_coin_game_walkthrough.py
"""

import numpy as np

from contractgame.env import CoinColor, EnvConfig, GridState, Move, observe, reset, step


def render(cfg, state):
    rows = []
    for r in range(cfg.grid_size):
        cells = []
        for c in range(cfg.grid_size):
            cell = "."
            if state.coin_pos == (r, c):
                cell = "r" if state.coin_color == CoinColor.RED else "b"
            if state.red_pos == (r, c):
                cell = "R" if cell == "." else cell.upper() + "!"
            if state.blue_pos == (r, c):
                cell = "B" if cell == "." else "B!"
            cells.append(cell.ljust(2))
        rows.append(" ".join(cells))
    return "\n".join(rows)


def main():
    cfg = EnvConfig()
    rng = np.random.default_rng(7)
    state = reset(cfg, 7)
    print("Initial board (R/B agents, r/b coin):")
    print(render(cfg, state))
    print("observation length:", observe(cfg, state).size)

    print("\nRandom play for 10 steps:")
    for t in range(10):
        moves = (Move(int(rng.integers(5))), Move(int(rng.integers(5))))
        state, rewards = step(cfg, state, moves, rng)
        note = ""
        if rewards[0] > 0:
            note = f"  <- red collected ({rewards[0]})"
        if rewards[1] > 0:
            note = f"  <- blue collected ({rewards[1]})"
        print(f"t={state.t:2d} moves={moves[0].name:>5},{moves[1].name:>5}{note}")
    print(render(cfg, state))

    print("\nForced tie: both agents step onto the coin; collector is random.")
    tie = GridState((0, 0), (0, 2), (0, 1), CoinColor.RED, t=0)
    wins = [0, 0]
    for _ in range(1000):
        _, rewards = step(cfg, tie, (Move.RIGHT, Move.LEFT), rng)
        wins[0 if rewards[0] > 0 else 1] += 1
    print(f"red won {wins[0]}, blue won {wins[1]} of 1000 contested grabs")

    print("\nMismatch pays less: red walking onto a blue coin.")
    mism = GridState((0, 0), (2, 2), (0, 1), CoinColor.BLUE, t=0)
    _, rewards = step(cfg, mism, (Move.RIGHT, Move.STAY), rng)
    print("rewards:", rewards)


if __name__ == "__main__":
    main()
