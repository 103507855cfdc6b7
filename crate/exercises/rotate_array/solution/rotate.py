def rotate(nums, k):
    if not nums:
        return []
    k = k % len(nums)
    if k == 0:
        return list(nums)
    return nums[-k:] + nums[:-k]
