def move_zeroes(nums):
    write = 0
    for read in range(len(nums)):
        if nums[read] != 0 and read > 0:
            nums[write], nums[read] = nums[read], nums[write]
            write += 1
    return nums
