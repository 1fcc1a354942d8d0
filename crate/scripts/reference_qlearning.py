"""Independent reference run for the tabular Hungry-Thirsty learner.

Re-implements the gridworld and epsilon-greedy Q-learning from their
definitions (not from the Rust sources) and reports the mean fitness over
the final 100 episodes for several seeds, for both the shaped and the
naive reward. The acceptance threshold is fixed from these numbers.

    python3 scripts/reference_qlearning.py [--episodes 10000] [--seeds 0 1 2 3 4]
"""

import argparse
import random
import statistics

W = H = 4
STEPS = 200
ACTIONS = ["up", "down", "left", "right", "eat", "drink"]
DEFAULT_WALLS = [(1, 0, 2, 0), (1, 1, 2, 1), (0, 2, 0, 3), (1, 2, 1, 3), (2, 2, 3, 2), (3, 1, 3, 2)]
CORNERS = [(0, 0), (3, 0), (0, 3), (3, 3)]
SHAPED = {(False, False): 1.0, (True, False): -0.1, (False, True): 0.3, (True, True): -1.0}
NAIVE = {(False, False): 1.0, (True, False): 0.0, (False, True): 1.0, (True, True): 0.0}


def blocked_set():
    s = set()
    for x1, y1, x2, y2 in DEFAULT_WALLS:
        s.add(((x1, y1), (x2, y2)))
        s.add(((x2, y2), (x1, y1)))
    return s


def run(seed, rewards, episodes, alpha=0.1, gamma=0.99, eps0=0.3, eps1=0.05):
    rng = random.Random(seed)
    walls = blocked_set()
    food, water = rng.sample(CORNERS, 2)
    starts = [(x, y) for y in range(H) for x in range(W) if (x, y) not in CORNERS]
    q = {}

    def qrow(s):
        return q.setdefault(s, [0.0] * 6)

    fitness_log = []
    for ep in range(episodes):
        eps = eps0 + (eps1 - eps0) * min(ep / episodes, 1.0)
        pos = rng.choice(starts)
        hungry, thirsty = True, True
        fit = 0
        for _ in range(STEPS):
            s = (pos, hungry, thirsty)
            row = qrow(s)
            if rng.random() < eps:
                a = rng.randrange(6)
            else:
                a = max(range(6), key=lambda i: (row[i], -i))
            act = ACTIONS[a]
            npos = pos
            dx, dy = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}.get(act, (0, 0))
            cand = (pos[0] + dx, pos[1] + dy)
            if (dx, dy) != (0, 0) and 0 <= cand[0] < W and 0 <= cand[1] < H and (pos, cand) not in walls:
                npos = cand
            nhungry = not (act == "eat" and pos == food and not thirsty)
            drank = act == "drink" and pos == water
            nthirsty = False if drank else thirsty
            if not nthirsty and not drank:
                nthirsty = rng.random() < 0.1
            r = rewards[(nhungry, nthirsty)]
            ns = (npos, nhungry, nthirsty)
            row[a] += alpha * (r + gamma * max(qrow(ns)) - row[a])
            pos, hungry, thirsty = npos, nhungry, nthirsty
            fit += not hungry
        fitness_log.append(fit)
    return statistics.mean(fitness_log[-100:])


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--episodes", type=int, default=10000)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = p.parse_args()
    shaped, naive = [], []
    for seed in args.seeds:
        s = run(seed, SHAPED, args.episodes)
        n = run(seed, NAIVE, args.episodes)
        shaped.append(s)
        naive.append(n)
        print(f"seed={seed} shaped={s:.2f} naive={n:.2f}")
    print(f"shaped min={min(shaped):.2f} mean={statistics.mean(shaped):.2f}")
    print(f"naive  max={max(naive):.2f} mean={statistics.mean(naive):.2f}")


if __name__ == "__main__":
    main()
