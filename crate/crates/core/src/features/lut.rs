//! Fixed 256-entry RGB lookup table for rendering spectrogram heatmaps.
//!
//! Dark-to-bright ramp with monotone luminance, so larger spectrogram
//! values always render brighter. The bytes are frozen here to keep
//! rendered heatmaps bit-exact across builds.

pub const HEATMAP_LUT: [[u8; 3]; 256] = [
    [0, 0, 4], [1, 0, 6], [2, 1, 8], [3, 1, 11], [4, 1, 13], [5, 2, 15], [7, 2, 17], [8, 2, 19],
    [9, 2, 22], [10, 3, 24], [11, 3, 26], [12, 3, 28], [13, 4, 30], [14, 4, 33], [15, 4, 35], [16, 5, 37],
    [18, 5, 39], [19, 5, 41], [20, 5, 43], [21, 6, 46], [22, 6, 48], [23, 6, 50], [24, 7, 52], [25, 7, 54],
    [26, 7, 57], [27, 8, 59], [29, 8, 61], [30, 8, 63], [31, 8, 65], [32, 9, 68], [33, 9, 70], [34, 9, 72],
    [35, 10, 74], [36, 10, 76], [37, 10, 79], [38, 11, 81], [39, 11, 83], [41, 11, 84], [43, 11, 85], [44, 12, 86],
    [46, 12, 87], [48, 12, 87], [49, 13, 88], [51, 13, 89], [53, 13, 89], [54, 13, 90], [56, 14, 91], [58, 14, 92],
    [59, 14, 92], [61, 14, 93], [63, 15, 94], [64, 15, 94], [66, 15, 95], [68, 16, 96], [69, 16, 97], [71, 16, 97],
    [73, 16, 98], [74, 17, 99], [76, 17, 99], [78, 17, 100], [79, 17, 101], [81, 18, 101], [83, 18, 102], [84, 18, 103],
    [86, 19, 104], [88, 19, 104], [89, 19, 105], [91, 19, 106], [93, 20, 106], [94, 20, 107], [96, 20, 108], [98, 20, 109],
    [99, 21, 109], [101, 21, 110], [103, 22, 110], [104, 22, 109], [106, 23, 109], [107, 23, 109], [109, 24, 108], [111, 24, 108],
    [112, 25, 108], [114, 26, 108], [115, 26, 107], [117, 27, 107], [119, 27, 107], [120, 28, 106], [122, 29, 106], [123, 29, 106],
    [125, 30, 105], [127, 30, 105], [128, 31, 105], [130, 31, 105], [131, 32, 104], [133, 33, 104], [135, 33, 104], [136, 34, 103],
    [138, 34, 103], [139, 35, 103], [141, 35, 102], [142, 36, 102], [144, 37, 102], [146, 37, 102], [147, 38, 101], [149, 38, 101],
    [150, 39, 101], [152, 39, 100], [154, 40, 100], [155, 41, 100], [157, 41, 99], [158, 42, 99], [160, 43, 98], [161, 43, 98],
    [163, 44, 97], [164, 45, 96], [166, 46, 95], [167, 47, 94], [169, 47, 93], [170, 48, 92], [172, 49, 91], [173, 50, 90],
    [175, 51, 89], [176, 52, 88], [177, 52, 88], [179, 53, 87], [180, 54, 86], [182, 55, 85], [183, 56, 84], [185, 57, 83],
    [186, 57, 82], [188, 58, 81], [189, 59, 80], [191, 60, 79], [192, 61, 78], [194, 62, 77], [195, 62, 77], [196, 63, 76],
    [198, 64, 75], [199, 65, 74], [201, 66, 73], [202, 67, 72], [204, 67, 71], [205, 68, 70], [207, 69, 69], [208, 70, 68],
    [210, 71, 67], [211, 71, 67], [212, 73, 66], [213, 74, 64], [214, 75, 63], [215, 77, 62], [216, 78, 61], [217, 80, 59],
    [218, 81, 58], [219, 83, 57], [220, 84, 56], [221, 86, 54], [221, 87, 53], [222, 89, 52], [223, 90, 51], [224, 91, 49],
    [225, 93, 48], [226, 94, 47], [227, 96, 46], [228, 97, 45], [229, 99, 43], [230, 100, 42], [230, 102, 41], [231, 103, 40],
    [232, 105, 38], [233, 106, 37], [234, 107, 36], [235, 109, 35], [236, 110, 33], [237, 112, 32], [238, 113, 31], [239, 115, 30],
    [240, 116, 28], [240, 118, 27], [241, 119, 26], [242, 121, 25], [243, 122, 24], [244, 123, 22], [245, 125, 21], [245, 127, 21],
    [245, 129, 22], [245, 130, 22], [246, 132, 23], [246, 134, 23], [246, 136, 24], [246, 138, 24], [246, 140, 25], [246, 142, 25],
    [246, 144, 26], [246, 145, 26], [247, 147, 27], [247, 149, 27], [247, 151, 28], [247, 153, 28], [247, 155, 29], [247, 157, 29],
    [247, 158, 30], [248, 160, 30], [248, 162, 31], [248, 164, 31], [248, 166, 32], [248, 168, 32], [248, 170, 33], [248, 171, 33],
    [249, 173, 34], [249, 175, 34], [249, 177, 35], [249, 179, 35], [249, 181, 36], [249, 183, 36], [249, 185, 37], [250, 186, 37],
    [250, 188, 38], [250, 190, 38], [250, 192, 39], [250, 194, 41], [250, 195, 44], [250, 197, 47], [250, 199, 51], [250, 201, 54],
    [250, 202, 58], [250, 204, 61], [250, 206, 65], [250, 207, 68], [251, 209, 71], [251, 211, 75], [251, 212, 78], [251, 214, 82],
    [251, 216, 85], [251, 218, 89], [251, 219, 92], [251, 221, 95], [251, 223, 99], [251, 224, 102], [251, 226, 106], [251, 228, 109],
    [251, 229, 113], [251, 231, 116], [251, 233, 119], [251, 235, 123], [251, 236, 126], [251, 238, 130], [252, 240, 133], [252, 241, 137],
    [252, 243, 140], [252, 245, 143], [252, 246, 147], [252, 248, 150], [252, 250, 154], [252, 252, 157], [252, 253, 161], [252, 255, 164],];
