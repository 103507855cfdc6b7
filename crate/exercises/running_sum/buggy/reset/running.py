def running_sum(nums):
    total = 0
    out = []
    for x in nums:
        total = x
        out.append(total)
    return out
